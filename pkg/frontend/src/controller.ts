/**
 * Browser wiring: event delegation over the rendered view, keyboard
 * shortcuts (1/2/3 label the selected fact), HTML5 drag-and-drop of
 * facts onto bio rows, localStorage autosave, and the submit flow with
 * inline rejection and retry banners.
 */

import { ApiClient, submitFlow, type FlowOutcome } from "./api.js";
import {
  addBio,
  beginStepThree,
  clearDraft,
  initState,
  loadDraft,
  markSaved,
  moveFact,
  removeBio,
  reviseStepTwo,
  saveDraft,
  setLabel,
  setLink,
  type DraftStorage,
  type UiTaskState,
} from "./state.js";
import { renderDone, renderRetryBanner, renderTask, type ViewOptions } from "./render.js";
import type { TaskJson, Verdict } from "./types.js";

const KEY_TO_VERDICT: Record<string, Verdict> = {
  "1": "Supported",
  "2": "NotSupported",
  "3": "Irrelevant",
};

export class AnnotatorController {
  private state?: UiTaskState;
  private view: ViewOptions = { activePage: 0 };
  private banner = "";

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly annotatorId: string,
    private readonly storage: DraftStorage,
  ) {}

  async start(): Promise<void> {
    this.root.addEventListener("click", (event) => this.onClick(event));
    this.root.addEventListener("change", (event) => this.onChange(event));
    this.root.addEventListener("dragstart", (event) => this.onDragStart(event as DragEvent));
    this.root.addEventListener("dragover", (event) => event.preventDefault());
    this.root.addEventListener("drop", (event) => this.onDrop(event as DragEvent));
    document.addEventListener("keydown", (event) => this.onKey(event));
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    const next = await this.client.nextTask(this.annotatorId);
    if (next.done) {
      this.state = undefined;
      this.root.innerHTML = renderDone();
      return;
    }
    const task = next as TaskJson;
    this.state = loadDraft(this.storage, this.annotatorId, task) ?? initState(task);
    this.view = { activePage: 0 };
    this.render();
  }

  private update(next: UiTaskState): void {
    this.state = next;
    saveDraft(this.storage, this.annotatorId, next);
    this.render();
  }

  private render(): void {
    if (!this.state) {
      return;
    }
    this.root.innerHTML = this.banner + renderTask(this.state, this.view);
    this.banner = "";
  }

  private onClick(event: Event): void {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target || !this.state) {
      return;
    }
    const action = target.dataset.action;
    try {
      if (action === "select-fact") {
        this.view = { ...this.view, selectedFact: target.dataset.fact };
        this.render();
      } else if (action === "select-page") {
        this.view = { ...this.view, activePage: Number(target.dataset.page) };
        this.render();
      } else if (action === "move-fact") {
        this.update(moveFact(this.state, target.dataset.fact!, Number(target.dataset.bio)));
      } else if (action === "add-bio") {
        this.update(addBio(this.state));
      } else if (action === "remove-bio") {
        this.update(removeBio(this.state, Number(target.dataset.bio)));
      } else if (action === "begin-step3") {
        this.update(beginStepThree(this.state));
      } else if (action === "revise-step2") {
        this.update(reviseStepTwo(this.state));
      } else if (action === "set-label") {
        this.update(setLabel(this.state, target.dataset.fact!, target.dataset.verdict as Verdict));
      } else if (action === "submit") {
        void this.submit();
      }
    } catch (error) {
      this.banner = `<div class="banner banner-error">${String(error)}</div>`;
      this.render();
    }
  }

  private onChange(event: Event): void {
    const target = event.target as HTMLSelectElement;
    if (target.dataset.action !== "set-link" || !this.state) {
      return;
    }
    const bioIndex = Number(target.dataset.bio);
    if (target.value === "") {
      return;
    }
    if (target.value === "no-match") {
      this.update(setLink(this.state, bioIndex, null));
      return;
    }
    const page = this.state.task.entity_pages.find((p) => p.page_id === target.value);
    if (page) {
      this.update(setLink(this.state, bioIndex, { title: page.title, page_id: page.page_id }));
    }
  }

  private onDragStart(event: DragEvent): void {
    const row = (event.target as HTMLElement).closest<HTMLElement>(".fact-row");
    if (row?.dataset.fact && event.dataTransfer) {
      event.dataTransfer.setData("text/fact-id", row.dataset.fact);
    }
  }

  private onDrop(event: DragEvent): void {
    const zone = (event.target as HTMLElement).closest<HTMLElement>("[data-drop-bio]");
    const factId = event.dataTransfer?.getData("text/fact-id");
    if (zone && factId && this.state && this.state.step === "two") {
      event.preventDefault();
      this.update(moveFact(this.state, factId, Number(zone.dataset.dropBio)));
    }
  }

  private onKey(event: KeyboardEvent): void {
    if (!this.state || this.state.step !== "three" || !this.view.selectedFact) {
      return;
    }
    const verdict = KEY_TO_VERDICT[event.key];
    if (verdict) {
      this.update(setLabel(this.state, this.view.selectedFact, verdict));
    }
  }

  private async submit(): Promise<void> {
    if (!this.state) {
      return;
    }
    const outcome = await submitFlow(this.client, this.annotatorId, this.state);
    await this.handleOutcome(outcome);
  }

  private async handleOutcome(outcome: FlowOutcome): Promise<void> {
    if (!this.state) {
      return;
    }
    if (outcome.kind === "done") {
      clearDraft(this.storage, this.annotatorId, this.state.task.paragraph_id);
      this.state = markSaved(this.state);
      await this.loadNext();
      return;
    }
    if (outcome.kind === "queued") {
      this.banner = renderRetryBanner("offline");
      this.render();
      const bannerEl = this.root.querySelector<HTMLElement>('[data-action="retry-submit"]');
      bannerEl?.addEventListener("click", async () => {
        await this.handleOutcome(await outcome.retry());
      });
      return;
    }
    this.banner = `<div class="banner banner-error">Server rejected ${outcome.kind === "step2_rejected" ? "step 2" : "step 3"}: ${outcome.detail}</div>`;
    this.render();
  }
}
