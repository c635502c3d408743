/** Wire shapes of the review service, as the JSON actually arrives. */

export type SuggestionStatus = "pending" | "accepted" | "rejected";

export interface Suggestion {
  id: string;
  start: number;
  end: number;
  label: string;
  surface: string;
  source: string;
  confidence: number | null;
  replacement: string;
  status: SuggestionStatus;
  decided_by: string | null;
  decided_at: string | null;
}

export interface ProjectView {
  id: string;
  language: string;
  version: number;
  text: string;
  sentences: Array<[number, number]>;
  has_gold: boolean;
  suggestions: Suggestion[];
}

export interface DetectResult {
  version: number;
  suggestions: Suggestion[];
  detectors: Record<string, Record<string, number>>;
  warnings: string[];
  unavailable: Record<string, string>;
}

export interface UniformizeResult {
  version: number;
  added: number;
  suggestions: Suggestion[];
}

export interface DecisionResult {
  version: number;
  suggestion: Suggestion;
}

export interface ManualSpanResult {
  version: number;
  suggestion: Suggestion;
  suggestions: Suggestion[];
}

export interface GoldSpan {
  start: number;
  end: number;
  label: string;
}

export interface CreateDocumentBody {
  text: string;
  language: string;
  id?: string;
  gold?: GoldSpan[];
}

export interface ManualSpanBody {
  start: number;
  end: number;
  label: string;
  replacement: string;
}
