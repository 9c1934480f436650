// Pure HTML-string renderers for every pane. Keeping these free of DOM
// access lets the tests assert on output without a browser; main.ts is
// the only module that touches document.

import type { ActionName, PhaseViewModel } from "./phases.js";
import type { ProjectView } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const ACTION_LABELS: Record<ActionName, string> = {
  generate_stories: "Generate stories",
  prioritize: "Run prioritization",
  generate_uml: "Generate UML",
  generate_backend: "Generate backend",
  generate_frontend: "Generate frontend",
  generate_unit_test: "Generate unit tests",
  generate_e2e_test: "Generate e2e tests",
  run_compliance: "Run compliance review",
  download_csv: "Download CSV",
  view_diagram: "View diagram",
  approve: "Approve phase",
  reject: "Reject phase",
};

const PHASE_LABELS: Record<string, string> = {
  requirements: "Requirements",
  prioritization: "Prioritization",
  architecture: "Architecture",
  code_generation: "Code generation",
  testing: "Testing",
  compliance: "Compliance",
};

export function renderActionButton(action: ActionName): string {
  const danger = action === "reject" ? " danger" : "";
  return `<button class="action${danger}" data-action="${action}">${ACTION_LABELS[action]}</button>`;
}

export function renderPhaseNav(views: PhaseViewModel[]): string {
  const items = views
    .map((view) => {
      const marker = view.status === "complete" ? "✓" : view.status === "current" ? "●" : "○";
      return `<li class="nav-${view.status}" data-phase="${view.phase}">${marker} ${PHASE_LABELS[view.phase]}</li>`;
    })
    .join("");
  return `<ol class="phase-nav">${items}</ol>`;
}

export function renderRequirementsPane(project: ProjectView): string {
  return `<section class="pane" data-pane="requirements">
  <h2>Requirements</h2>
  <textarea id="requirements-editor" rows="6">${escapeHtml(project.requirements_text)}</textarea>
  <p class="hint">Upload a text file or edit above, then generate stories.</p>
  <input type="file" id="requirements-upload" accept=".txt,text/plain">
</section>`;
}

export function renderStoriesPane(project: ProjectView): string {
  if (project.stories.length === 0) {
    return `<section class="pane" data-pane="stories"><h2>User stories</h2><p class="empty">No stories yet.</p></section>`;
  }
  const epicTitles = new Map(project.epics.map((epic) => [epic.id, epic.title]));
  const rows = project.stories
    .map((story) => {
      const factors = story.factors;
      const cell = (name: keyof NonNullable<typeof factors>, value: number | "") =>
        `<input class="factor" type="number" min="1" max="10" data-story="${story.id}" data-factor="${name}" value="${value}">`;
      const criteria = story.acceptance_criteria.length
        ? `<ul class="criteria">${story.acceptance_criteria.map((c) => `<li>${escapeHtml(c)}</li>`).join("")}</ul>`
        : "";
      return `<tr data-story-row="${story.id}">
  <td>${story.id}</td>
  <td>${escapeHtml(epicTitles.get(story.epic_id) ?? "")}</td>
  <td>${escapeHtml(story.narrative)}${criteria}</td>
  <td>${cell("bv", factors ? factors.bv : "")}</td>
  <td>${cell("tc", factors ? factors.tc : "")}</td>
  <td>${cell("rr", factors ? factors.rr : "")}</td>
  <td>${cell("js", factors ? factors.js : "")}</td>
</tr>`;
    })
    .join("");
  return `<section class="pane" data-pane="stories">
  <h2>User stories</h2>
  <p class="hint">Edited factors are sent as human overrides on the next prioritization run.</p>
  <table class="stories">
    <thead><tr><th>id</th><th>epic</th><th>narrative</th><th>BV</th><th>TC</th><th>RR</th><th>JS</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

export function renderPrioritizationPane(project: ProjectView): string {
  const result = project.prioritization;
  if (result === null || !result.display) {
    return `<section class="pane" data-pane="prioritization"><h2>Prioritization</h2><p class="empty">Not prioritized yet.</p></section>`;
  }
  const narratives = new Map(project.stories.map((story) => [story.id, story.narrative]));
  const rows = result.display
    .map(
      (row) => `<tr>
  <td>${row.rank}</td><td>${row.story_id}</td><td>${escapeHtml(row.display)}</td>
  <td>${escapeHtml(narratives.get(row.story_id) ?? "")}</td>
</tr>`,
    )
    .join("");
  const provenance =
    result.provenance === "llm_suggested"
      ? "model suggested"
      : result.provenance === "human_entered"
        ? "human entered"
        : "mixed (human overrides)";
  return `<section class="pane" data-pane="prioritization">
  <h2>Prioritization (${escapeHtml(result.method)})</h2>
  <p class="provenance">Factors: ${provenance}</p>
  <table class="ranking" data-sortable>
    <thead><tr><th data-sort="rank">rank</th><th>story</th><th data-sort="value">value</th><th>narrative</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

/** The UML pane embeds the SVG document exactly as the service served it. */
export function renderUmlPane(project: ProjectView, svgDocument: string | null): string {
  const uml = project.uml;
  if (uml === null) {
    return `<section class="pane" data-pane="uml"><h2>Architecture</h2><p class="empty">No diagram yet.</p></section>`;
  }
  const diagram = svgDocument
    ? `<figure class="diagram">${svgDocument}</figure>`
    : `<p class="empty">Diagram not rendered; source shown below.</p>`;
  const critique = uml.critique
    ? `<h3>Critique</h3><blockquote>${escapeHtml(uml.critique)}</blockquote>`
    : "";
  return `<section class="pane" data-pane="uml">
  <h2>Architecture</h2>
  ${diagram}
  <details><summary>Diagram source</summary><pre class="uml-source">${escapeHtml(uml.source)}</pre></details>
  ${critique}
</section>`;
}

export function renderCodePane(project: ProjectView): string {
  if (project.code_artifacts.length === 0) {
    return `<section class="pane" data-pane="code"><h2>Code artifacts</h2><p class="empty">Nothing generated yet.</p></section>`;
  }
  const cards = project.code_artifacts
    .map((artifact, artifactIndex) => {
      const blocks = artifact.blocks
        .map(
          (block, blockIndex) => `<div class="code-block">
  <div class="code-block-bar">
    <span class="lang">${escapeHtml(block.language_label)}</span>
    <button class="copy" data-copy="${artifactIndex}:${blockIndex}">Copy</button>
    <button class="download" data-download="${artifactIndex}:${blockIndex}">Download</button>
  </div>
  <pre><code>${escapeHtml(block.body)}</code></pre>
</div>`,
        )
        .join("");
      return `<article class="artifact" data-method="${artifact.method}">
  <h3>${escapeHtml(artifact.method)}</h3>
  ${artifact.narrative ? `<p>${escapeHtml(artifact.narrative)}</p>` : ""}
  ${blocks}
</article>`;
    })
    .join("");
  return `<section class="pane" data-pane="code"><h2>Code artifacts</h2>${cards}</section>`;
}

export function renderCompliancePane(project: ProjectView): string {
  const report = project.compliance;
  if (report === null) {
    return `<section class="pane" data-pane="compliance"><h2>Compliance</h2><p class="empty">Not reviewed yet.</p></section>`;
  }
  const bySeverity = ["violation", "warning", "info"] as const;
  const rows = bySeverity
    .flatMap((severity) => report.findings.filter((finding) => finding.severity === severity))
    .map(
      (finding) => `<tr class="sev-${finding.severity}">
  <td>${finding.severity}</td><td>${escapeHtml(finding.rule_id)}</td>
  <td>${escapeHtml(finding.subject)}</td><td>${escapeHtml(finding.detail)}</td>
</tr>`,
    )
    .join("");
  const degraded = report.degraded
    ? `<p class="degraded">Model narrative unavailable; static findings only.</p>`
    : "";
  const narrative = report.llm_narrative
    ? `<h3>Reviewer narrative</h3><blockquote>${escapeHtml(report.llm_narrative)}</blockquote>`
    : "";
  return `<section class="pane" data-pane="compliance">
  <h2>Compliance (checklist ${escapeHtml(report.checklist_version)})</h2>
  ${degraded}
  ${report.findings.length ? `<table class="findings"><thead><tr><th>severity</th><th>rule</th><th>subject</th><th>detail</th></tr></thead><tbody>${rows}</tbody></table>` : `<p class="empty">No findings.</p>`}
  ${narrative}
</section>`;
}

export function renderMetricsPane(project: ProjectView): string {
  if (project.metrics.length === 0) {
    return `<section class="pane" data-pane="metrics"><h2>Metrics</h2><p class="empty">No metrics yet.</p></section>`;
  }
  const rows = project.metrics
    .map(
      (metric) => `<tr>
  <td>${metric.phase}</td><td>${escapeHtml(metric.method_label)}</td>
  <td>${metric.duration_ms}</td><td>${escapeHtml(metric.provider_label)}</td>
</tr>`,
    )
    .join("");
  return `<section class="pane" data-pane="metrics">
  <h2>Metrics</h2>
  <table class="metrics"><thead><tr><th>phase</th><th>method</th><th>duration (ms)</th><th>provider</th></tr></thead><tbody>${rows}</tbody></table>
</section>`;
}

export function renderGateBar(project: ProjectView, actions: ActionName[]): string {
  const revision = project.revision > 0 ? ` · revision ${project.revision}` : "";
  const buttons = actions.map(renderActionButton).join(" ");
  return `<div class="gate-bar">
  <span class="gate-state">phase: <strong>${project.phase}</strong> · gate: ${project.gate}${revision}</span>
  <span class="gate-actions">${buttons}</span>
</div>`;
}

export function renderApp(
  project: ProjectView,
  views: PhaseViewModel[],
  actions: ActionName[],
  svgDocument: string | null,
): string {
  return `<header>
  <h1>${escapeHtml(project.title)}</h1>
  ${renderPhaseNav(views)}
  ${renderGateBar(project, actions)}
</header>
<main>
  ${renderRequirementsPane(project)}
  ${renderStoriesPane(project)}
  ${renderPrioritizationPane(project)}
  ${renderUmlPane(project, svgDocument)}
  ${renderCodePane(project)}
  ${renderCompliancePane(project)}
  ${renderMetricsPane(project)}
</main>`;
}
