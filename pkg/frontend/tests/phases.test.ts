import { describe, expect, it } from "vitest";

import { availableActions, projectToView } from "../src/phases.js";
import { makeProject, withPrioritization, withStories, withUml } from "./helpers.js";

describe("projectToView", () => {
  it("renders six panes with future phases locked", () => {
    const views = projectToView(withStories(makeProject({ phase: "prioritization" })));
    expect(views).toHaveLength(6);
    const unlocked = views.filter((view) => view.status !== "locked");
    const locked = views.filter((view) => view.status === "locked");
    expect(unlocked).toHaveLength(2);
    expect(locked).toHaveLength(4);
    expect(views[0].status).toBe("complete");
    expect(views[1].status).toBe("current");
  });

  it("unlocks everything with no actions on a done project", () => {
    let project = withUml(withPrioritization(withStories(makeProject())));
    project = { ...project, phase: "done" };
    const views = projectToView(project);
    expect(views.every((view) => view.status !== "locked")).toBe(true);
    expect(views.every((view) => view.actions.length === 0)).toBe(true);
  });

  it("shows the revision count on a rejected gate", () => {
    const project = withStories(makeProject({ gate: "rejected", revision: 2 }));
    const current = projectToView(project).find((view) => view.status === "current");
    expect(current?.gate).toBe("rejected");
    expect(current?.revision).toBe(2);
  });

  it("locked panes never carry actions", () => {
    const views = projectToView(withStories(makeProject()));
    for (const view of views.filter((v) => v.status === "locked")) {
      expect(view.actions).toEqual([]);
    }
  });
});

describe("availableActions", () => {
  it("withholds approve until stories exist", () => {
    const bare = makeProject();
    expect(availableActions(bare)).not.toContain("approve");
    expect(availableActions(bare)).toContain("generate_stories");
    expect(availableActions(bare)).toContain("reject");
    expect(availableActions(withStories(bare))).toContain("approve");
  });

  it("only offers the current phase's agent actions", () => {
    const project = withStories(makeProject({ phase: "code_generation" }));
    const actions = availableActions(project);
    expect(actions).toContain("generate_backend");
    expect(actions).toContain("generate_frontend");
    expect(actions).not.toContain("generate_unit_test");
    expect(actions).not.toContain("generate_stories");
    expect(actions).not.toContain("prioritize");
  });

  it("enables CSV download once a prioritization result exists", () => {
    const before = withStories(makeProject({ phase: "prioritization" }));
    expect(availableActions(before)).not.toContain("download_csv");
    expect(availableActions(withPrioritization(before))).toContain("download_csv");
  });

  it("enables the diagram view only when rendered bytes exist", () => {
    const base = withStories(makeProject({ phase: "architecture" }));
    expect(availableActions(withUml(base, false))).not.toContain("view_diagram");
    expect(availableActions(withUml(base, true))).toContain("view_diagram");
  });

  it("offers no gate actions at done", () => {
    const project = { ...withStories(makeProject()), phase: "done" as const };
    const actions = availableActions(project);
    expect(actions).not.toContain("approve");
    expect(actions).not.toContain("reject");
  });
});
