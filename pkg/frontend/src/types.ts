/** Wire shapes exchanged with the gateway.
 *
 * Thresholds travel as JSON numbers except the two infinities, which are
 * the strings "-inf" and "inf"; decode with thresholdFromWire before doing
 * arithmetic.
 */

export type Route = "student" | "teacher";

export type ThresholdWire = number | string;

export interface PolicyWire {
  score_type: "energy" | "softmax" | "entropy" | "random";
  threshold: ThresholdWire;
  random_rate: number;
  specialization?: { cbar: number; extra_index: number } | null;
}

export interface ConfigWire {
  policy: PolicyWire;
  task: string;
  degraded_mode: string;
  /** Backend descriptors and serving options pass through untouched. */
  [key: string]: unknown;
}

export interface HistogramWire {
  edges: number[];
  counts: number[];
  underflow: number;
  overflow: number;
}

export interface StatsWire {
  total: number;
  student_count: number;
  teacher_count: number;
  student_fraction: number;
  mean_student_latency_ms: number;
  mean_total_latency_ms: number;
  estimated_cost: number;
  histogram: HistogramWire;
}

export interface CurvePointWire {
  threshold: ThresholdWire;
  accuracy: number;
  expected_cost: number;
  student_fraction: number;
}

export interface CurveWire {
  kind: "tradeoff_curve";
  policy: PolicyWire;
  dataset_digest?: string;
  seed?: number;
  points: CurvePointWire[];
}

export interface RouteEventWire {
  type: "route";
  id: string | null;
  route: Route;
  score: number;
  latency_ms: number;
}
