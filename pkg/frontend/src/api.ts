/**
 * Annotation API client. fetch is injectable for tests; server
 * rejections and network failures come back as structured results so
 * the caller can surface them inline without losing drafts.
 */

import type {
  NextTaskJson,
  Step2Body,
  Step3Body,
  SubmitAck,
  Verdict,
} from "./types.js";
import type { UiTaskState } from "./state.js";
import { partitionProblems } from "./state.js";

export interface ApiConfig {
  baseUrl: string;
  token: string;
  fetchFn?: typeof fetch;
}

export type SubmitResult =
  | { kind: "ok"; ack: SubmitAck }
  | { kind: "rejected"; status: number; detail: string }
  | { kind: "network"; detail: string };

export class ApiClient {
  private readonly baseUrl: string;
  private readonly token: string;
  private readonly fetchFn: typeof fetch;

  constructor(config: ApiConfig) {
    this.baseUrl = config.baseUrl.replace(/\/$/, "");
    this.token = config.token;
    this.fetchFn = config.fetchFn ?? fetch;
  }

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) {
      headers["X-DFS-Token"] = this.token;
    }
    return headers;
  }

  async nextTask(annotatorId: string): Promise<NextTaskJson> {
    const response = await this.fetchFn(
      `${this.baseUrl}/tasks/next?annotator=${encodeURIComponent(annotatorId)}`,
      { headers: this.headers() },
    );
    if (!response.ok) {
      throw new Error(`tasks/next failed: HTTP ${response.status}`);
    }
    return (await response.json()) as NextTaskJson;
  }

  private async post(path: string, body: unknown): Promise<SubmitResult> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method: "POST",
        headers: this.headers(),
        body: JSON.stringify(body),
      });
    } catch (error) {
      return { kind: "network", detail: String(error) };
    }
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const payload = (await response.json()) as { detail?: string };
        if (payload.detail) {
          detail = payload.detail;
        }
      } catch {
        // keep the bare status
      }
      return { kind: "rejected", status: response.status, detail };
    }
    return { kind: "ok", ack: (await response.json()) as SubmitAck };
  }

  submitStep2(body: Step2Body): Promise<SubmitResult> {
    return this.post("/labels/step2", body);
  }

  submitStep3(body: Step3Body): Promise<SubmitResult> {
    return this.post("/labels/step3", body);
  }

  async export(): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}/export`, {
      headers: this.headers(),
    });
    if (!response.ok) {
      throw new Error(`export failed: HTTP ${response.status}`);
    }
    return response.json();
  }

  async progress(): Promise<unknown> {
    const response = await this.fetchFn(`${this.baseUrl}/progress`, {
      headers: this.headers(),
    });
    if (!response.ok) {
      throw new Error(`progress failed: HTTP ${response.status}`);
    }
    return response.json();
  }
}

export function buildStep2Body(annotatorId: string, state: UiTaskState): Step2Body {
  return {
    annotator_id: annotatorId,
    paragraph_id: state.task.paragraph_id,
    num_bios: state.draftPartition.length,
    bio_spans: state.draftPartition.map((span) => [...span]),
    bio_entity_links: state.draftLinks.map((link) => {
      if (link === undefined) {
        throw new Error("every bio needs a link (entity or NoMatch) before submitting");
      }
      return link === null ? null : { title: link.title, page_id: link.page_id };
    }),
  };
}

export function buildStep3Body(annotatorId: string, state: UiTaskState): Step3Body {
  const linkOf = (factId: string) => {
    const bioIndex = state.draftPartition.findIndex((span) => span.includes(factId));
    const link = bioIndex === -1 ? null : state.draftLinks[bioIndex];
    return link === undefined || link === null
      ? null
      : { title: link.title, page_id: link.page_id };
  };
  const labels: Record<string, Verdict> = {};
  const attribution: Step3Body["fact_entity_attribution"] = {};
  for (const fact of state.task.facts) {
    const verdict = state.draftLabels[fact.id];
    if (verdict === undefined) {
      throw new Error(`fact '${fact.id}' has no label`);
    }
    labels[fact.id] = verdict;
    attribution[fact.id] = linkOf(fact.id);
  }
  return {
    annotator_id: annotatorId,
    paragraph_id: state.task.paragraph_id,
    fact_labels: labels,
    fs_fact_labels: { ...labels },
    fact_entity_attribution: attribution,
  };
}

export type FlowOutcome =
  | { kind: "done"; step2: SubmitAck; step3: SubmitAck }
  | { kind: "step2_rejected"; detail: string }
  | { kind: "step3_rejected"; detail: string }
  | { kind: "queued"; retry: () => Promise<FlowOutcome> };

/**
 * Submit step 2 then step 3. Server rejections surface with their
 * detail text and leave drafts untouched; network failures return a
 * retry closure for the offline banner.
 */
export async function submitFlow(
  client: ApiClient,
  annotatorId: string,
  state: UiTaskState,
): Promise<FlowOutcome> {
  const problems = partitionProblems(state);
  if (problems.length > 0) {
    return { kind: "step2_rejected", detail: problems.join("; ") };
  }
  const attempt = async (): Promise<FlowOutcome> => {
    const step2 = await client.submitStep2(buildStep2Body(annotatorId, state));
    if (step2.kind === "network") {
      return { kind: "queued", retry: attempt };
    }
    if (step2.kind === "rejected") {
      return { kind: "step2_rejected", detail: step2.detail };
    }
    const step3 = await client.submitStep3(buildStep3Body(annotatorId, state));
    if (step3.kind === "network") {
      return { kind: "queued", retry: attempt };
    }
    if (step3.kind === "rejected") {
      return { kind: "step3_rejected", detail: step3.detail };
    }
    return { kind: "done", step2: step2.ack, step3: step3.ack };
  };
  return attempt();
}
