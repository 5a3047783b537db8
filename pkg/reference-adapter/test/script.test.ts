import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import type { HarnessRecord } from "../src/protocol.js";
import { ScriptEngine, type Script } from "../src/script.js";

const DATA = fileURLToPath(new URL("../../tests/data/", import.meta.url));

interface TranscriptEntry {
  dir: "tx" | "rx";
  record: Record<string, unknown>;
}

function loadTranscript(name: string): TranscriptEntry[] {
  return readFileSync(DATA + name, "utf-8")
    .split("\n")
    .filter((line) => line.trim())
    .map((line) => JSON.parse(line) as TranscriptEntry);
}

function loadScript(name: string): Script {
  return JSON.parse(readFileSync(DATA + name, "utf-8")) as Script;
}

/** Split a transcript into (tx, expected rx records) exchanges. */
function exchanges(entries: TranscriptEntry[]): Array<[Record<string, unknown>, Array<Record<string, unknown>>]> {
  const out: Array<[Record<string, unknown>, Array<Record<string, unknown>>]> = [];
  for (const entry of entries) {
    if (entry.dir === "tx") out.push([entry.record, []]);
    else out[out.length - 1][1].push(entry.record);
  }
  return out;
}

function conforms(scriptName: string, transcriptName: string): void {
  const engine = new ScriptEngine(loadScript(scriptName));
  for (const [tx, expected] of exchanges(loadTranscript(transcriptName))) {
    const event = tx as unknown as HarnessRecord;
    if (event.type === "eos") {
      engine.onEvent(event);
      expect(expected).toEqual([{ type: "bye" }]);
      continue;
    }
    const got: Array<Record<string, unknown>> = engine.onEvent(event).map((record) => ({
      ...record,
    }));
    got.push({ type: "ack" });
    expect(got).toEqual(expected);
  }
}

describe("script engine conformance against harness golden transcripts", () => {
  it("reproduces the perfect-oracle transcripts", () => {
    conforms("oracle_script_v_abd.json", "oracle_transcript_v_abd.jsonl");
    conforms("oracle_script_v_pnr.json", "oracle_transcript_v_pnr.jsonl");
    conforms("oracle_script_v_sqa.json", "oracle_transcript_v_sqa.jsonl");
  });

  it("reproduces the spammer transcript", () => {
    conforms("spammer_script.json", "spammer_transcript_v_abd.jsonl");
  });

  it("delays responses by whole events", () => {
    const script: Script = {
      rules: [
        {
          trigger: { kind: "query", query_id: "q" },
          action: { kind: "respond", text: "late", delay_events: 2, query_id: "q" },
        },
      ],
    };
    const engine = new ScriptEngine(script);
    expect(engine.onEvent({ type: "query", t: 1.0, query_id: "q", text: "?" })).toEqual([]);
    expect(engine.onEvent({ type: "frame", t: 2.0, frame_ref: "v:2" })).toEqual([]);
    expect(engine.onEvent({ type: "frame", t: 3.0, frame_ref: "v:3" })).toEqual([
      { type: "response", text: "late", query_id: "q" },
    ]);
  });

  it("first matching rule wins and hello is silent", () => {
    const script: Script = {
      silence_text: "no",
      rules: [
        { trigger: { kind: "frame", t: 1.0 }, action: { kind: "respond", text: "first" } },
        { trigger: { kind: "always" }, action: { kind: "silence" } },
      ],
    };
    const engine = new ScriptEngine(script);
    expect(engine.onEvent({ type: "hello", video_id: "v", task: "ABD", fps: 1 })).toEqual([]);
    expect(engine.onEvent({ type: "frame", t: 1.0, frame_ref: "v:1" })).toEqual([
      { type: "response", text: "first" },
    ]);
    expect(engine.onEvent({ type: "frame", t: 2.0, frame_ref: "v:2" })).toEqual([
      { type: "response", text: "no" },
    ]);
  });
});
