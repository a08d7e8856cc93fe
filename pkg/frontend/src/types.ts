// Wire types of the session service. These mirror the JSON the server
// sends; every displayed value comes from one of these payloads.

export interface PendingQuery {
  query_id: string;
  sequence_id: string;
  sequence_metadata: Record<string, string>;
  nn_sequence_id: string;
  nn_label: number;
  nn_metadata: Record<string, string>;
  delta: number;
  lambda_l: number | null;
  lambda_u: number | null;
  forced: boolean;
}

export interface SessionState {
  memory_size: number;
  supervision_size: number;
  distinct_labels: number;
  lambda_l: number | null;
  lambda_u: number | null;
  lambda_r: number | null;
  query_rate: number;
  steps: number;
  stream_length: number;
  stream_position: number;
  pending: PendingQuery | null;
}

export interface TraceRecord {
  iteration: number;
  sequence_id: string;
  label: number;
  kind: "seen" | "new";
  delta: number | null;
  queried: boolean;
  [key: string]: unknown;
}

export type StepResponse =
  | { status: "decision"; decision: TraceRecord }
  | { status: "pending"; pending: PendingQuery }
  | { status: "end_of_stream" };

export interface AnswerResponse {
  status: "decision";
  decision: TraceRecord;
}

export interface CreateSessionRequest {
  manifest: string;
  alpha: number;
  bootstrap_queries?: number;
  seed?: number;
  policy?: "random" | "devel";
}
