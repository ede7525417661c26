/** Payload shapes of the retrieval service JSON API. */

export interface Hit {
  image_id: string;
  cnnc_distance: number;
  rbc_distance: number;
  final_rank: number;
}

export interface QueryResponse {
  query_id: string;
  hits: Hit[];
}

export interface RoiMatchBox {
  target_image_id: string;
  x: number;
  y: number;
  w: number;
  h: number;
  score: number;
}

export interface RoiMatchError {
  target_image_id: string;
  error: string;
}

export type RoiMatchEntry = RoiMatchBox | RoiMatchError;

export interface RoiMatchResponse {
  matches: RoiMatchEntry[];
}

export interface IndexStats {
  entry_count: number;
  cnnc_bits: number;
  rbc_bits: number;
  config: Record<string, unknown>;
}

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function isMatchError(entry: RoiMatchEntry): entry is RoiMatchError {
  return "error" in entry;
}
