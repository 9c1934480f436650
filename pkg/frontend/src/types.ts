// Shapes of the documents the service returns. Field names follow the
// persisted project record, so the UI can display any stored snapshot.

export type PhaseName =
  | "requirements"
  | "prioritization"
  | "architecture"
  | "code_generation"
  | "testing"
  | "compliance"
  | "done";

export type GateStatus = "pending" | "approved" | "rejected";

export interface FactorsView {
  bv: number;
  tc: number;
  rr: number;
  js: number;
}

export interface StoryView {
  id: string;
  epic_id: string;
  narrative: string;
  acceptance_criteria: string[];
  factors: FactorsView | null;
}

export interface EpicView {
  id: string;
  title: string;
  description: string;
}

export interface RankedRow {
  rank: number;
  story_id: string;
  display: string;
}

export interface PrioritizationView {
  method: string;
  provenance: string;
  ranked: { story_id: string; rank: number; score: string | null; bucket: string | null; allocation: string | null }[];
  display?: RankedRow[];
}

export interface UmlView {
  source: string;
  encoded: string;
  diagram_b16: string | null;
  diagram_media_type: string;
  critique: string;
}

export interface CodeBlockView {
  language_label: string;
  body: string;
}

export interface CodeArtifactView {
  method: string;
  narrative: string;
  source_request_id: string;
  blocks: CodeBlockView[];
}

export interface FindingView {
  rule_id: string;
  severity: "info" | "warning" | "violation";
  subject: string;
  detail: string;
}

export interface ComplianceView {
  checklist_version: string;
  llm_narrative: string;
  degraded: boolean;
  findings: FindingView[];
}

export interface MetricView {
  phase: PhaseName;
  method_label: string;
  duration_ms: number;
  provider_label: string;
  timestamp: string;
}

export interface ProjectView {
  id: string;
  title: string;
  requirements_text: string;
  phase: PhaseName;
  gate: GateStatus;
  revision: number;
  version: number;
  epics: EpicView[];
  stories: StoryView[];
  prioritization: PrioritizationView | null;
  uml: UmlView | null;
  code_artifacts: CodeArtifactView[];
  compliance: ComplianceView | null;
  metrics: MetricView[];
}
