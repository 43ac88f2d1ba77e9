/**
 * Task-session state machine.
 *
 * Step two partitions facts into bios and links each bio to an entity
 * page (or NoMatch); step three labels every fact against its bio's
 * linked page. All transitions are pure functions returning a new
 * state, which keeps autosave and undo trivial. Step three is
 * unreachable while the partition is invalid or a link is unset, and
 * revising step two resets step-three drafts (labels must never
 * outlive the partition they were made against).
 */

import type { BioLink, TaskJson, Verdict } from "./types.js";
import { validatePartition } from "./validation.js";

export type Step = "two" | "three" | "review";

export interface UiTaskState {
  task: TaskJson;
  step: Step;
  draftPartition: string[][];
  /** One entry per bio; undefined = not chosen, null = NoMatch. */
  draftLinks: (BioLink | undefined)[];
  draftLabels: Record<string, Verdict>;
  dirty: boolean;
}

export function initState(task: TaskJson): UiTaskState {
  return {
    task,
    step: "two",
    draftPartition: [task.facts.map((f) => f.id)],
    draftLinks: [undefined],
    draftLabels: {},
    dirty: false,
  };
}

function factKnown(state: UiTaskState, factId: string): boolean {
  return state.task.facts.some((f) => f.id === factId);
}

export function addBio(state: UiTaskState): UiTaskState {
  return {
    ...state,
    draftPartition: [...state.draftPartition.map((s) => [...s]), []],
    draftLinks: [...state.draftLinks, undefined],
    dirty: true,
  };
}

/** Dissolve a bio; its facts fall back to the first bio. */
export function removeBio(state: UiTaskState, bioIndex: number): UiTaskState {
  if (state.draftPartition.length <= 1 || bioIndex >= state.draftPartition.length) {
    return state;
  }
  const partition = state.draftPartition.map((s) => [...s]);
  const [removed] = partition.splice(bioIndex, 1);
  const links = [...state.draftLinks];
  links.splice(bioIndex, 1);
  partition[0] = [...partition[0], ...removed];
  return { ...state, draftPartition: partition, draftLinks: links, dirty: true };
}

export function moveFact(state: UiTaskState, factId: string, bioIndex: number): UiTaskState {
  if (!factKnown(state, factId)) {
    throw new Error(`fact '${factId}' is not part of the current task`);
  }
  if (bioIndex < 0 || bioIndex >= state.draftPartition.length) {
    throw new Error(`bio ${bioIndex} does not exist`);
  }
  const partition = state.draftPartition.map((span) => span.filter((id) => id !== factId));
  partition[bioIndex] = [...partition[bioIndex], factId];
  return { ...state, draftPartition: partition, dirty: true };
}

export function setLink(state: UiTaskState, bioIndex: number, link: BioLink): UiTaskState {
  if (bioIndex < 0 || bioIndex >= state.draftLinks.length) {
    throw new Error(`bio ${bioIndex} does not exist`);
  }
  if (link !== null && !state.task.entity_pages.some((p) => p.page_id === link.page_id)) {
    throw new Error(`entity '${link.page_id}' is not one of the task's pages`);
  }
  const links = [...state.draftLinks];
  links[bioIndex] = link;
  return { ...state, draftLinks: links, dirty: true };
}

export function partitionProblems(state: UiTaskState): string[] {
  const problems = validatePartition(
    state.task.facts.map((f) => f.id),
    state.draftPartition.length,
    state.draftPartition,
  );
  state.draftLinks.forEach((link, index) => {
    if (link === undefined) {
      problems.push(`bio ${index} has no linked entity (pick a page or NoMatch)`);
    }
  });
  return problems;
}

/** Step three only opens over a valid, fully linked partition. */
export function beginStepThree(state: UiTaskState): UiTaskState {
  const problems = partitionProblems(state);
  if (problems.length > 0) {
    throw new Error(`cannot start step three: ${problems.join("; ")}`);
  }
  return { ...state, step: "three", dirty: true };
}

export function setLabel(state: UiTaskState, factId: string, verdict: Verdict): UiTaskState {
  if (state.step !== "three") {
    throw new Error("labels can only be set during step three");
  }
  if (!factKnown(state, factId)) {
    throw new Error(`fact '${factId}' is not part of the current task`);
  }
  return {
    ...state,
    draftLabels: { ...state.draftLabels, [factId]: verdict },
    dirty: true,
  };
}

/** Reopening step two invalidates all step-three labels. */
export function reviseStepTwo(state: UiTaskState): UiTaskState {
  return { ...state, step: "two", draftLabels: {}, dirty: true };
}

export function unlabeledFacts(state: UiTaskState): string[] {
  return state.task.facts.map((f) => f.id).filter((id) => !(id in state.draftLabels));
}

export function beginReview(state: UiTaskState): UiTaskState {
  if (state.step !== "three") {
    throw new Error("review follows step three");
  }
  const missing = unlabeledFacts(state);
  if (missing.length > 0) {
    throw new Error(`unlabeled facts: ${missing.join(", ")}`);
  }
  return { ...state, step: "review" };
}

export function markSaved(state: UiTaskState): UiTaskState {
  return { ...state, dirty: false };
}

/** Bio index of a fact under the current draft partition. */
export function bioOfFact(state: UiTaskState, factId: string): number | undefined {
  const index = state.draftPartition.findIndex((span) => span.includes(factId));
  return index === -1 ? undefined : index;
}

// ---------------------------------------------------------------------------
// Draft autosave
// ---------------------------------------------------------------------------

export interface DraftStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

function draftKey(annotatorId: string, paragraphId: string): string {
  return `dfs-draft:${annotatorId}:${paragraphId}`;
}

export function saveDraft(storage: DraftStorage, annotatorId: string, state: UiTaskState): void {
  storage.setItem(
    draftKey(annotatorId, state.task.paragraph_id),
    JSON.stringify({
      step: state.step,
      draftPartition: state.draftPartition,
      draftLinks: state.draftLinks.map((l) => (l === undefined ? "unset" : l)),
      draftLabels: state.draftLabels,
    }),
  );
}

export function loadDraft(
  storage: DraftStorage,
  annotatorId: string,
  task: TaskJson,
): UiTaskState | undefined {
  const raw = storage.getItem(draftKey(annotatorId, task.paragraph_id));
  if (raw === null) {
    return undefined;
  }
  try {
    const parsed = JSON.parse(raw) as {
      step: Step;
      draftPartition: string[][];
      draftLinks: (BioLink | "unset")[];
      draftLabels: Record<string, Verdict>;
    };
    return {
      task,
      step: parsed.step,
      draftPartition: parsed.draftPartition,
      draftLinks: parsed.draftLinks.map((l) => (l === "unset" ? undefined : l)),
      draftLabels: parsed.draftLabels,
      dirty: false,
    };
  } catch {
    return undefined;
  }
}

export function clearDraft(storage: DraftStorage, annotatorId: string, paragraphId: string): void {
  storage.removeItem(draftKey(annotatorId, paragraphId));
}
