/** View model for the inter-annotator agreement screen. */

import type { AgreementView } from "./types.js";

const BANDS: [number, string][] = [
  [0.8, "almost perfect agreement"],
  [0.6, "substantial agreement"],
  [0.4, "moderate agreement"],
  [0.2, "fair agreement"],
  [0.0, "slight agreement"],
];

export function kappaBand(kappa: number): string {
  if (kappa < 0) return "less than chance agreement";
  for (const [threshold, text] of BANDS) {
    if (kappa >= threshold) return text;
  }
  return "slight agreement";
}

export interface AgreementSummary {
  headline: string;
  observed: string;
  items: number;
  disagreements: Record<string, string>[];
}

export function summarizeAgreement(view: AgreementView): AgreementSummary {
  return {
    headline: `kappa = ${view.kappa.toFixed(3)} (${kappaBand(view.kappa)})`,
    observed: `${(view.observed_agreement * 100).toFixed(1)}% observed agreement`,
    items: view.n_items,
    disagreements: view.disagreements,
  };
}
