/** Entry point: reads base URL, token, and annotator id from the query
 * string (?base=...&token=...&annotator=...) and mounts the app. */

import { ApiClient } from "./api.js";
import { AnnotatorController } from "./controller.js";

function param(name: string, fallback = ""): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app mount point");
  }
  const client = new ApiClient({
    baseUrl: param("base", "http://127.0.0.1:8321"),
    token: param("token"),
  });
  const annotator = param("annotator");
  if (!annotator) {
    root.innerHTML = '<div class="banner banner-error">Add ?annotator=&lt;id&gt; to the URL.</div>';
    return;
  }
  const controller = new AnnotatorController(root, client, annotator, window.localStorage);
  await controller.start();
}

void boot();
