/**
 * Full client-server round trip against a real annotation server
 * spawned from the Python package (no mocks).
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, submitFlow } from "../src/api.js";
import { beginStepThree, initState, moveFact, addBio, setLabel, setLink } from "../src/state.js";
import { isValidPartition } from "../src/validation.js";
import type { TaskJson } from "../src/types.js";

const PORT = 8400 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;
const TOKEN = "sesame";

let server: ChildProcess;

function taskRow(pid: string) {
  return {
    paragraph_id: pid,
    paragraph_text: `${pid} first event. ${pid} second event.`,
    facts: [
      { id: "f000", text: `${pid} fact zero.`, source_sentence_index: 0 },
      { id: "f001", text: `${pid} fact one.`, source_sentence_index: 0 },
      { id: "f002", text: `${pid} fact two.`, source_sentence_index: 1 },
    ],
    entity_pages: [
      { title: `${pid} (keeper)`, page_id: `${pid}-p0`, text: `${pid} keeper page body.` },
      { title: `${pid} (rider)`, page_id: `${pid}-p1`, text: `${pid} rider page body.` },
    ],
    model_tag: "e2e-model",
  };
}

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 20_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/progress`, {
        headers: { "X-DFS-Token": TOKEN },
      });
      if (response.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("annotation server did not come up in time");
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "dfs-e2e-"));
  const tasksPath = join(dir, "tasks.jsonl");
  writeFileSync(
    tasksPath,
    [taskRow("e2e-0001"), taskRow("e2e-0002")].map((r) => JSON.stringify(r)).join("\n") + "\n",
  );
  server = spawn(
    "python3",
    [
      "-m", "dfactscore.cli", "serve",
      "--tasks", tasksPath,
      "--journal", join(dir, "journal.jsonl"),
      "--annotators", "ann-a",
      "--overlap", "0",
      "--port", String(PORT),
      "--token", TOKEN,
    ],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe("step2 -> step3 round trip against the live server", () => {
  const client = new ApiClient({ baseUrl: BASE, token: TOKEN });

  it("completes one task end to end and sees it in the export", async () => {
    const next = await client.nextTask("ann-a");
    expect(next.done).toBe(false);
    const task = next as TaskJson;
    expect(task.paragraph_id).toBe("e2e-0001");
    expect(task.entity_pages).toHaveLength(2);

    // two bios: {f000, f001} -> keeper page, {f002} -> NoMatch
    let state = addBio(initState(task));
    state = moveFact(state, "f002", 1);
    state = setLink(state, 0, {
      title: task.entity_pages[0].title,
      page_id: task.entity_pages[0].page_id,
    });
    state = setLink(state, 1, null);
    state = beginStepThree(state);
    state = setLabel(state, "f000", "Supported");
    state = setLabel(state, "f001", "NotSupported");
    state = setLabel(state, "f002", "Supported"); // NoMatch bio: counts unsupported

    const outcome = await submitFlow(client, "ann-a", state);
    expect(outcome.kind).toBe("done");
    if (outcome.kind === "done") {
      expect(outcome.step2.version).toBe(1);
      // 1 supported of 3 relevant: the NoMatch bio cannot support its fact
      expect(outcome.step3.implied_dfs).toBe("1/3");
      expect(outcome.step3.implied_fs).toBe("2/3");
      expect(outcome.step3.unscorable).toBe(false);
    }

    const exportPayload = (await client.export()) as {
      rows: { paragraph_id: string; num_bios: number; dfs: string }[];
    };
    const row = exportPayload.rows.find((r) => r.paragraph_id === "e2e-0001");
    expect(row).toBeDefined();
    expect(row!.num_bios).toBe(2);
    expect(row!.dfs).toBe("1/3");

    const after = await client.nextTask("ann-a");
    expect(after.done).toBe(false);
    expect((after as TaskJson).paragraph_id).toBe("e2e-0002");
  }, 30_000);

  it("rejects exactly the partitions the client validator rejects", async () => {
    const next = (await client.nextTask("ann-a")) as TaskJson;
    const factIds = next.facts.map((f) => f.id);
    const badSpans = [[factIds[0]]]; // omits the other facts
    expect(isValidPartition(factIds, 1, badSpans)).toBe(false);
    const rejection = await client.submitStep2({
      annotator_id: "ann-a",
      paragraph_id: next.paragraph_id,
      num_bios: 1,
      bio_spans: badSpans,
      bio_entity_links: [null],
    });
    expect(rejection.kind).toBe("rejected");
    if (rejection.kind === "rejected") {
      expect(rejection.status).toBe(400);
      expect(rejection.detail).toContain("not covered");
    }

    const goodSpans = [factIds];
    expect(isValidPartition(factIds, 1, goodSpans)).toBe(true);
    const acceptance = await client.submitStep2({
      annotator_id: "ann-a",
      paragraph_id: next.paragraph_id,
      num_bios: 1,
      bio_spans: goodSpans,
      bio_entity_links: [null],
    });
    expect(acceptance.kind).toBe("ok");
  }, 30_000);

  it("enforces the token", async () => {
    const anonymous = new ApiClient({ baseUrl: BASE, token: "" });
    await expect(anonymous.progress()).rejects.toThrow(/401/);
  });
});
