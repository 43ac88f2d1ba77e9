/**
 * Pure HTML rendering of the annotator view: paragraph pane with
 * sentence highlighting, fact checklist with bio-group controls, and
 * tabbed entity pages with content-word highlighting for the selected
 * fact. Rendering never mutates state; the controller re-renders after
 * each transition.
 */

import type { TaskJson } from "./types.js";
import type { UiTaskState } from "./state.js";
import { bioOfFact, partitionProblems, unlabeledFacts } from "./state.js";

export interface ViewOptions {
  activePage: number;
  selectedFact?: string;
}

const VERDICT_KEYS: Record<string, string> = {
  Supported: "1",
  NotSupported: "2",
  Irrelevant: "3",
};

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

const STOPWORDS = new Set([
  "the", "a", "an", "of", "in", "on", "to", "and", "or", "is", "was",
  "were", "are", "for", "with", "by", "at", "as", "his", "her", "their",
]);

/** Content words of a fact, used to highlight likely evidence. */
export function contentWords(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^a-z0-9']+/)
    .filter((w) => w.length > 1 && !STOPWORDS.has(w));
}

export function highlightWords(pageText: string, words: readonly string[]): string {
  if (words.length === 0) {
    return escapeHtml(pageText);
  }
  const escaped = words.map((w) => w.replace(/[.*+?^${}()|[\]\\]/g, "\\$&"));
  const pattern = new RegExp(`\\b(${escaped.join("|")})\\b`, "gi");
  return escapeHtml(pageText).replace(pattern, "<mark>$1</mark>");
}

function splitSentences(text: string): string[] {
  const matches = text.match(/[^.!?]*[.!?]+(?:\s*\[\d+\])*\s*/g);
  if (!matches) {
    return text.trim() ? [text.trim()] : [];
  }
  const sentences = matches.map((s) => s.trim()).filter((s) => s.length > 0);
  const consumed = matches.join("").length;
  const tail = text.slice(consumed).trim();
  if (tail) {
    sentences.push(tail);
  }
  return sentences;
}

function renderParagraphPane(task: TaskJson, state: UiTaskState, options: ViewOptions): string {
  const selected = options.selectedFact
    ? task.facts.find((f) => f.id === options.selectedFact)
    : undefined;
  const sentences = splitSentences(task.paragraph_text)
    .map((sentence, index) => {
      const active = selected !== undefined && selected.source_sentence_index === index;
      return `<span class="sentence${active ? " sentence-active" : ""}" data-sentence="${index}">${escapeHtml(sentence)}</span>`;
    })
    .join(" ");
  return `<section class="pane pane-paragraph" aria-label="paragraph">
<h2>${escapeHtml(task.paragraph_id)}</h2>
<p class="paragraph-text">${sentences}</p>
</section>`;
}

function renderFactPane(state: UiTaskState, options: ViewOptions): string {
  const task = state.task;
  const problems = partitionProblems(state);
  const bioButtons = (factId: string) =>
    state.draftPartition
      .map(
        (_, bioIndex) =>
          `<button class="bio-pick${bioOfFact(state, factId) === bioIndex ? " bio-current" : ""}"` +
          ` data-action="move-fact" data-fact="${escapeHtml(factId)}" data-bio="${bioIndex}">B${bioIndex + 1}</button>`,
      )
      .join("");
  const labelButtons = (factId: string) =>
    Object.entries(VERDICT_KEYS)
      .map(
        ([verdict, key]) =>
          `<button class="label-pick${state.draftLabels[factId] === verdict ? " label-current" : ""}"` +
          ` data-action="set-label" data-fact="${escapeHtml(factId)}" data-verdict="${verdict}"` +
          ` title="shortcut: ${key}">${verdict}${state.draftLabels[factId] === verdict ? " ✓" : ""}</button>`,
      )
      .join("");
  const rows = task.facts
    .map((fact) => {
      const controls = state.step === "two" ? bioButtons(fact.id) : labelButtons(fact.id);
      const selected = options.selectedFact === fact.id ? " fact-selected" : "";
      return `<li class="fact-row${selected}" draggable="true" data-fact="${escapeHtml(fact.id)}">
<span class="fact-text" data-action="select-fact" data-fact="${escapeHtml(fact.id)}">${escapeHtml(fact.text)}</span>
<span class="fact-controls">${controls}</span>
</li>`;
    })
    .join("\n");
  const links = state.draftPartition
    .map((span, bioIndex) => {
      const current = state.draftLinks[bioIndex];
      const pageOptions = task.entity_pages
        .map(
          (page) =>
            `<option value="${escapeHtml(page.page_id)}"${current && current !== null && current.page_id === page.page_id ? " selected" : ""}>${escapeHtml(page.title)}</option>`,
        )
        .join("");
      return `<div class="bio-link" data-bio="${bioIndex}" data-drop-bio="${bioIndex}">
<strong>Bio ${bioIndex + 1}</strong> (${span.length} facts)
<select data-action="set-link" data-bio="${bioIndex}">
<option value=""${current === undefined ? " selected" : ""}>choose…</option>
<option value="no-match"${current === null ? " selected" : ""}>NoMatch</option>
${pageOptions}
</select>
<button data-action="remove-bio" data-bio="${bioIndex}"${state.draftPartition.length <= 1 ? " disabled" : ""}>dissolve</button>
</div>`;
    })
    .join("\n");
  const banner =
    state.step === "two" && problems.length > 0
      ? `<div class="banner banner-warn">${escapeHtml(problems.join("; "))}</div>`
      : "";
  const stepControls =
    state.step === "two"
      ? `<button data-action="add-bio">add bio</button>
<button data-action="begin-step3"${problems.length > 0 ? " disabled" : ""}>start labeling</button>`
      : `<button data-action="revise-step2">revise bios (clears labels)</button>
<button data-action="submit"${unlabeledFacts(state).length > 0 ? " disabled" : ""}>submit</button>`;
  return `<section class="pane pane-facts" aria-label="facts">
<h2>Step ${state.step === "two" ? "2: group and link" : state.step === "three" ? "3: label facts" : "review"}</h2>
${banner}
<ol class="fact-list">
${rows}
</ol>
<div class="bio-links">${links}</div>
<div class="step-controls">${stepControls}</div>
</section>`;
}

function renderEntityPane(task: TaskJson, state: UiTaskState, options: ViewOptions): string {
  const active = Math.min(Math.max(options.activePage, 0), task.entity_pages.length - 1);
  const tabs = task.entity_pages
    .map(
      (page, index) =>
        `<button class="tab${index === active ? " tab-active" : ""}" data-action="select-page" data-page="${index}">${escapeHtml(page.title)}</button>`,
    )
    .join("");
  const selected = options.selectedFact
    ? task.facts.find((f) => f.id === options.selectedFact)
    : undefined;
  const words = selected ? contentWords(selected.text) : [];
  const page = task.entity_pages[active];
  const body = page ? highlightWords(page.text, words) : "";
  return `<section class="pane pane-entities" aria-label="entity pages">
<nav class="tabs">${tabs}</nav>
<article class="page-text">${body}</article>
</section>`;
}

/**
 * The three-pane annotator view. A task without facts cannot be
 * annotated and renders as a blocking error banner instead.
 */
export function renderTask(state: UiTaskState, options: ViewOptions = { activePage: 0 }): string {
  const task = state.task;
  if (task.facts.length === 0) {
    return `<div class="banner banner-error">This task has no decomposed facts and cannot be annotated.</div>`;
  }
  return `<main class="three-pane">
${renderParagraphPane(task, state, options)}
${renderFactPane(state, options)}
${renderEntityPane(task, state, options)}
</main>`;
}

export function renderDone(): string {
  return `<div class="banner banner-ok">All assigned tasks are labeled. Thank you.</div>`;
}

export function renderRetryBanner(detail: string): string {
  return `<div class="banner banner-warn" data-action="retry-submit">Submission could not reach the server (${escapeHtml(detail)}). Click to retry; your drafts are saved locally.</div>`;
}
