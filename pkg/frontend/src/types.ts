// Shapes of the service JSON API.

export interface HandbookMeta {
  jurisdiction_id: string;
  display_name: string;
  language: string;
  source_uri?: string;
}

export interface ExcerptPayload {
  jurisdiction_id: string;
  paragraph_index: number;
  matched_keywords: string[];
  match_spans: [number, number][];
  text: string;
}

export interface QueryPayload {
  origin_jurisdiction: string;
  target_jurisdiction: string;
  nominal_plan: string;
  scene_description: string;
  unexpected_situation: string;
  output_language: string;
}

export interface AdaptResponse {
  trace_id: string;
  instruction: string;
  generic: boolean;
  keywords: string[];
  excerpts: ExcerptPayload[];
  latency_ms: number;
}

export interface SessionRecord {
  trace_id: string;
  created_at: string;
  latency_ms: number;
  query: QueryPayload;
  tre: {
    keywords: string[];
    no_match: boolean;
    excerpts: ExcerptPayload[];
  };
  plan: {
    instruction: string;
    generic: boolean;
  };
}

export interface ApiErrorBody {
  code: string;
  detail: string;
}

export interface QueryInput {
  origin_jurisdiction?: string;
  target_jurisdiction: string;
  nominal_plan: string;
  scene_description?: string;
  unexpected_situation?: string;
  output_language?: string;
}
