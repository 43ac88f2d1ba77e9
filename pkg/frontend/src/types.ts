/** Wire types mirroring the annotation API. */

export interface EntityRefJson {
  title: string;
  page_id: string;
}

export interface FactJson {
  id: string;
  text: string;
  source_sentence_index: number;
}

export interface EntityPageJson extends EntityRefJson {
  text: string;
}

export interface TaskJson {
  done: false;
  paragraph_id: string;
  paragraph_text: string;
  model_tag: string;
  facts: FactJson[];
  entity_pages: EntityPageJson[];
}

export interface DoneJson {
  done: true;
}

export type NextTaskJson = TaskJson | DoneJson;

export type Verdict = "Supported" | "NotSupported" | "Irrelevant";

/** null links a bio explicitly to NoMatch; undefined means not chosen yet. */
export type BioLink = EntityRefJson | null;

export interface Step2Body {
  annotator_id: string;
  paragraph_id: string;
  num_bios: number;
  bio_spans: string[][];
  bio_entity_links: BioLink[];
}

export interface Step3Body {
  annotator_id: string;
  paragraph_id: string;
  fact_labels: Record<string, Verdict>;
  fs_fact_labels: Record<string, Verdict>;
  fact_entity_attribution: Record<string, EntityRefJson | null>;
}

export interface SubmitAck {
  ok: boolean;
  version: number;
  implied_dfs?: string | null;
  implied_fs?: string | null;
  unscorable?: boolean;
}
