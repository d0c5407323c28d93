/** Wire types mirrored from the HTTP API. */

export interface ChartSeries {
  name: string;
  values: number[];
}

export interface ChartSpec {
  chart_id: string;
  kind: "bar" | "line";
  title: string;
  x_label: string;
  y_label: string;
  categories: string[];
  series: ChartSeries[];
  provenance: { tool: string; params: Record<string, unknown>; sql?: string };
}

export interface TraceStep {
  index: number;
  thought: string;
  tool: string;
  args: Record<string, unknown>;
  observation: string;
  artifacts: string[];
}

export type TurnStatus = "ok" | "step_limit" | "provider_error";

export interface AgentTurn {
  session_id: string;
  user_message: string;
  steps: TraceStep[];
  final_answer: string;
  charts: string[];
  status: TurnStatus;
}

export interface SessionRecord {
  session_id: string;
  created_at: string;
  turns: AgentTurn[];
}

export interface ApiErrorBody {
  error: { code: string; message: string };
}
