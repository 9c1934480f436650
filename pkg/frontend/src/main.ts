// Browser bootstrap: the only module that touches the DOM. The page
// polls the project resource after every action instead of holding a
// push channel; a stale-version conflict surfaces as "reload".

import { ApiClient, ApiError, type FactorOverride } from "./api.js";
import { availableActions, projectToView, type ActionName } from "./phases.js";
import { renderApp } from "./views.js";
import type { ProjectView } from "./types.js";

const POLL_INTERVAL_MS = 4000;

const api = new ApiClient(
  new URLSearchParams(window.location.search).get("service") ?? window.location.origin,
);

let currentProject: ProjectView | null = null;
let pendingOverrides: Record<string, FactorOverride> = {};

function root(): HTMLElement {
  return document.getElementById("app") as HTMLElement;
}

function showError(message: string): void {
  const banner = document.getElementById("error-banner") as HTMLElement;
  banner.textContent = message;
  banner.style.display = message ? "block" : "none";
}

async function refresh(): Promise<void> {
  if (currentProject === null) return;
  const project = await api.getProject(currentProject.id);
  let svg: string | null = null;
  if (project.uml !== null && project.uml.diagram_b16 !== null) {
    try {
      svg = await api.fetchUmlSvg(project.id);
    } catch {
      svg = null;
    }
  }
  currentProject = project;
  root().innerHTML = renderApp(project, projectToView(project), availableActions(project), svg);
}

function collectOverrides(): Record<string, FactorOverride> {
  const overrides: Record<string, FactorOverride> = { ...pendingOverrides };
  document.querySelectorAll<HTMLInputElement>("input.factor[data-edited='1']").forEach((input) => {
    const storyId = input.dataset.story as string;
    const story = currentProject?.stories.find((s) => s.id === storyId);
    const base: FactorOverride = story?.factors
      ? { bv: story.factors.bv, tc: story.factors.tc, rr: story.factors.rr, js: story.factors.js }
      : { bv: 5, tc: 5, rr: 5, js: 5 };
    const current = overrides[storyId] ?? base;
    (current as unknown as Record<string, number>)[input.dataset.factor as string] = Number(
      input.value,
    );
    overrides[storyId] = current;
  });
  return overrides;
}

async function performAction(action: ActionName): Promise<void> {
  if (currentProject === null) return;
  const id = currentProject.id;
  switch (action) {
    case "generate_stories":
      await api.generateStories(id);
      break;
    case "prioritize": {
      const overrides = collectOverrides();
      await api.prioritize(id, "wsjf", overrides);
      pendingOverrides = {};
      break;
    }
    case "generate_uml":
      await api.generateUml(id);
      break;
    case "generate_backend":
    case "generate_frontend":
    case "generate_unit_test":
    case "generate_e2e_test":
      await api.generateCode(id, action.replace("generate_", ""));
      break;
    case "run_compliance":
      await api.runCompliance(id);
      break;
    case "download_csv": {
      const bytes = await api.downloadCsv(id);
      const blob = new Blob([bytes as BlobPart], { type: "text/csv" });
      const link = document.createElement("a");
      link.href = URL.createObjectURL(blob);
      link.download = "prioritization.csv";
      link.click();
      URL.revokeObjectURL(link.href);
      return; // no server-side state change, skip refresh
    }
    case "view_diagram":
      document.querySelector("[data-pane='uml']")?.scrollIntoView({ behavior: "smooth" });
      return;
    case "approve":
      await api.decide(id, "approve");
      break;
    case "reject":
      await api.decide(id, "reject");
      break;
  }
  await refresh();
}

function wireEvents(): void {
  root().addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.dataset.action as ActionName | undefined;
    if (action) {
      performAction(action).catch((error) => {
        if (error instanceof ApiError && error.code === "version_conflict") {
          showError("Project changed elsewhere; reloading.");
          refresh().catch(() => undefined);
        } else {
          showError(error instanceof Error ? error.message : String(error));
        }
      });
    }
    const copyRef = target.dataset.copy;
    if (copyRef && currentProject) {
      const [artifactIndex, blockIndex] = copyRef.split(":").map(Number);
      const body = currentProject.code_artifacts[artifactIndex]?.blocks[blockIndex]?.body ?? "";
      navigator.clipboard?.writeText(body).catch(() => undefined);
    }
    const downloadRef = target.dataset.download;
    if (downloadRef && currentProject) {
      const [artifactIndex, blockIndex] = downloadRef.split(":").map(Number);
      const artifact = currentProject.code_artifacts[artifactIndex];
      const block = artifact?.blocks[blockIndex];
      if (block) {
        const blob = new Blob([block.body], { type: "text/plain" });
        const link = document.createElement("a");
        link.href = URL.createObjectURL(blob);
        link.download = `${artifact.method}-${blockIndex + 1}.txt`;
        link.click();
        URL.revokeObjectURL(link.href);
      }
    }
  });
  root().addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.classList.contains("factor")) {
      target.dataset.edited = "1";
    }
  });
}

async function start(): Promise<void> {
  wireEvents();
  const params = new URLSearchParams(window.location.search);
  let projectId = params.get("project");
  if (!projectId) {
    const listing = await api.listProjects();
    if (listing.projects.length > 0) {
      projectId = listing.projects[0].id;
    } else {
      const text = window.prompt("No projects yet. Paste requirements text to start one:") ?? "";
      if (!text.trim()) {
        showError("No project selected and no requirements provided.");
        return;
      }
      const created = await api.createProject("New project", text);
      projectId = created.project_id;
    }
  }
  currentProject = await api.getProject(projectId);
  await refresh();
  window.setInterval(() => {
    refresh().catch(() => undefined);
  }, POLL_INTERVAL_MS);
}

start().catch((error) => showError(error instanceof Error ? error.message : String(error)));
