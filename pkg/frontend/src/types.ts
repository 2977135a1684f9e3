// Mirrors the service's JSON field names exactly; do not rename.

export interface BandGeometry {
  anchor_x: number;
  anchor_y: number;
  length: number;
  skew_deg: number;
  line_count: number;
  gap_px: number;
}

export interface PanPreset {
  pan_index: number;
  geometry: BandGeometry;
}

export interface Camera {
  camera_id: string;
  kind: 'fixed' | 'ptz';
  location_label: string;
  frame_width: number;
  frame_height: number;
  d_th: number;
  l_th: number;
  pixel_th: number;
  pan_presets: PanPreset[];
}

export interface Thresholds {
  d_th: number;
  l_th: number;
  pixel_th: number;
}

export interface FrameRef {
  camera_id: string;
  pan_index: number;
  captured_at: string;
  path: string;
  sequence_no: number;
}

export type ViolationStatus = 'pending' | 'confirmed' | 'dismissed';

export interface ViolationRecord {
  violation_id: string;
  frame: FrameRef;
  mean_longest_run: number;
  per_line_longest_run: number[];
  mean_diff: number;
  thresholds_used: Thresholds;
  status: ViolationStatus;
  slip_no: string | null;
  review?: {
    verdict: string;
    operator: string;
    reviewed_at: string;
  };
}

export interface ViolationPage {
  items: ViolationRecord[];
  page: number;
  page_size: number;
  total: number;
  pages: number;
}

export interface FrameEvent extends FrameRef {
  frame_id: string;
  event: 'seeded' | 'background' | 'no_violation' | 'violation' | 'error';
  mean_diff: number | null;
  mean_longest_run: number | null;
  error: string | null;
}

export interface RedetectResult {
  frame_id: string;
  ok: boolean;
  error: { code: string; message: string } | null;
  checkpoint_sequence_no?: number;
  mean_diff?: number;
  foreground?: boolean;
  thresholds?: Thresholds;
  per_line_longest_run?: number[] | null;
  mean_longest_run?: number | null;
  violated?: boolean;
  persisted?: boolean;
  violation_id?: string | null;
  persist_error?: string;
}

export interface DryRunResponse {
  geometry: BandGeometry;
  lines: [number, number][][];
  bounds: { x_min: number; y_min: number; x_max: number; y_max: number };
}

export interface ErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
