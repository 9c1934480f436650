import type { ProjectView } from "../src/types.js";

/** A project snapshot builder with sane defaults for view tests. */
export function makeProject(overrides: Partial<ProjectView> = {}): ProjectView {
  return {
    id: "p-test",
    title: "Review platform",
    requirements_text: "Streamline research with a login feature.",
    phase: "requirements",
    gate: "pending",
    revision: 0,
    version: 1,
    epics: [{ id: "E1", title: "General", description: "" }],
    stories: [],
    prioritization: null,
    uml: null,
    code_artifacts: [],
    compliance: null,
    metrics: [],
    ...overrides,
  };
}

export function withStories(project: ProjectView, count = 2): ProjectView {
  const stories = Array.from({ length: count }, (_, i) => ({
    id: `S${i + 1}`,
    epic_id: "E1",
    narrative: `As a user, I want feature ${i + 1}.`,
    acceptance_criteria: [],
    factors: { bv: 5, tc: 4, rr: 3, js: 2 },
  }));
  return { ...project, stories };
}

export function withPrioritization(project: ProjectView): ProjectView {
  return {
    ...project,
    prioritization: {
      method: "wsjf",
      provenance: "llm_suggested",
      ranked: project.stories.map((story, i) => ({
        story_id: story.id,
        rank: i + 1,
        score: "19/4",
        bucket: null,
        allocation: null,
      })),
      display: project.stories.map((story, i) => ({
        story_id: story.id,
        rank: i + 1,
        display: "4.75",
      })),
    },
  };
}

export function withUml(project: ProjectView, rendered = true): ProjectView {
  return {
    ...project,
    uml: {
      source: "A -> B: login",
      encoded: "0m0",
      diagram_b16: rendered ? "3c7376672f3e" : null,
      diagram_media_type: rendered ? "image/svg+xml" : "",
      critique: "Needs lockout handling.",
    },
  };
}
