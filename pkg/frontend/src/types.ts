export interface SchemeClass {
  id: string;
  name: string;
  description: string;
  anonymized_example: string;
}

export interface Scheme {
  classes: SchemeClass[];
  merge_map: Record<string, string>;
}

export interface PostPayload {
  post_id: string;
  content: string;
  thread_title: string;
  board_title: string;
  bin_index: number;
}

export interface NextResponse {
  done: boolean;
  total: number;
  labeled: number;
  ordinal?: number;
  post?: PostPayload;
}

export interface LabelAck {
  ok: boolean;
  post_id: string;
  overwrote: boolean;
}

export interface AgreementResponse {
  insufficient_overlap: boolean;
  reason?: string;
  kind?: string;
  value?: number;
  n_items?: number;
  n_raters?: number;
  annotators?: string[];
  conflicts: string[];
}
