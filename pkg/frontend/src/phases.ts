// Phase chain and action availability. These rules mirror the service's
// gates exactly: an enabled control must never produce a 409 and a
// disabled one always would (the contract tests drive both directions).

import type { PhaseName, ProjectView } from "./types.js";

export const PHASE_CHAIN: PhaseName[] = [
  "requirements",
  "prioritization",
  "architecture",
  "code_generation",
  "testing",
  "compliance",
  "done",
];

// The six reviewable panes; "done" is the terminal marker, not a pane.
export const PANE_PHASES: PhaseName[] = PHASE_CHAIN.slice(0, 6);

export type ActionName =
  | "generate_stories"
  | "prioritize"
  | "generate_uml"
  | "generate_backend"
  | "generate_frontend"
  | "generate_unit_test"
  | "generate_e2e_test"
  | "run_compliance"
  | "download_csv"
  | "view_diagram"
  | "approve"
  | "reject";

export type PaneStatus = "locked" | "current" | "complete";

export interface PhaseViewModel {
  phase: PhaseName;
  status: PaneStatus;
  gate: string;
  revision: number;
  actions: ActionName[];
}

export function phaseIndex(phase: PhaseName): number {
  return PHASE_CHAIN.indexOf(phase);
}

function agentActions(phase: PhaseName): ActionName[] {
  switch (phase) {
    case "requirements":
      return ["generate_stories"];
    case "prioritization":
      return ["prioritize"];
    case "architecture":
      return ["generate_uml"];
    case "code_generation":
      return ["generate_backend", "generate_frontend"];
    case "testing":
      return ["generate_unit_test", "generate_e2e_test"];
    case "compliance":
      return ["run_compliance"];
    default:
      return [];
  }
}

/** Actions the service will accept for this project right now. */
export function availableActions(project: ProjectView): ActionName[] {
  const actions: ActionName[] = [];
  if (project.phase !== "done") {
    actions.push(...agentActions(project.phase));
    // leaving requirements is refused by the service until stories exist
    if (project.phase !== "requirements" || project.stories.length > 0) {
      actions.push("approve");
    }
    actions.push("reject");
  }
  // download and view controls key off artifact existence, not phase
  if (project.prioritization !== null) {
    actions.push("download_csv");
  }
  if (project.uml !== null && project.uml.diagram_b16 !== null) {
    actions.push("view_diagram");
  }
  return actions;
}

/** One view model per reviewable pane, future phases locked. */
export function projectToView(project: ProjectView): PhaseViewModel[] {
  const currentIndex = phaseIndex(project.phase);
  const enabled = availableActions(project);
  const done = project.phase === "done";
  return PANE_PHASES.map((phase) => {
    const index = phaseIndex(phase);
    let status: PaneStatus;
    if (index < currentIndex) {
      status = "complete";
    } else if (index === currentIndex) {
      status = "current";
    } else {
      status = "locked";
    }
    let actions: ActionName[] = [];
    if (done) {
      actions = []; // everything reviewable, nothing actionable
    } else if (status === "current") {
      actions = enabled;
    } else if (status === "complete") {
      // past panes keep their passive artifact controls only
      if (phase === "prioritization" && enabled.includes("download_csv")) {
        actions = ["download_csv"];
      } else if (phase === "architecture" && enabled.includes("view_diagram")) {
        actions = ["view_diagram"];
      }
    }
    return {
      phase,
      status,
      gate: status === "current" ? project.gate : status === "complete" ? "approved" : "locked",
      revision: project.revision,
      actions,
    };
  });
}
