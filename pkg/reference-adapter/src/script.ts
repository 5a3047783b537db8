/**
 * Deterministic script engine: the first matching rule fires per event.
 *
 * This is the behavioral twin of the harness's bundled scripted adapter; the
 * conformance tests replay golden transcripts recorded from the harness's own
 * serializer and require byte-equal responses.
 */

import type { HarnessRecord, ResponseRecord } from "./protocol.js";

export interface Trigger {
  kind: "always" | "frame" | "query";
  t?: number;
  query_id?: string;
}

export interface Action {
  kind: "respond" | "silence" | "echo";
  text?: string;
  delay_events?: number;
  query_id?: string;
}

export interface Rule {
  trigger: Trigger;
  action: Action;
}

export interface Script {
  silence_text?: string;
  rules: Rule[];
}

interface Pending {
  remaining: number;
  text: string;
  queryId?: string;
}

function triggerMatches(trigger: Trigger, event: HarnessRecord): boolean {
  if (trigger.kind === "always") {
    return event.type === "frame" || event.type === "query";
  }
  if (trigger.kind === "frame") {
    return event.type === "frame" && Math.abs(event.t - (trigger.t ?? NaN)) < 1e-9;
  }
  if (trigger.kind === "query") {
    if (event.type !== "query") return false;
    return trigger.query_id === undefined || trigger.query_id === null
      ? true
      : event.query_id === trigger.query_id;
  }
  return false;
}

export class ScriptEngine {
  private pending: Pending[] = [];

  constructor(private readonly script: Script) {}

  /** Responses for one incoming event; ack/bye are the caller's concern. */
  onEvent(event: HarnessRecord): ResponseRecord[] {
    if (event.type === "hello") return [];
    if (event.type === "eos") {
      this.pending = [];
      return [];
    }
    const out: ResponseRecord[] = [];
    for (const item of this.pending) item.remaining -= 1;
    const due = this.pending.filter((item) => item.remaining <= 0);
    this.pending = this.pending.filter((item) => item.remaining > 0);
    for (const item of due) {
      const record: ResponseRecord = { type: "response", text: item.text };
      if (item.queryId !== undefined) record.query_id = item.queryId;
      out.push(record);
    }
    for (const rule of this.script.rules) {
      if (!triggerMatches(rule.trigger, event)) continue;
      const action = rule.action;
      if (action.kind === "silence") {
        out.push({ type: "response", text: this.script.silence_text ?? "no" });
      } else if (action.kind === "echo") {
        const record: ResponseRecord = {
          type: "response",
          text: event.type === "query" ? event.text : "",
        };
        if (event.type === "query") record.query_id = event.query_id;
        out.push(record);
      } else if (action.kind === "respond") {
        const delay = action.delay_events ?? 0;
        if (delay <= 0) {
          const record: ResponseRecord = { type: "response", text: action.text ?? "" };
          if (action.query_id !== undefined && action.query_id !== null) {
            record.query_id = action.query_id;
          }
          out.push(record);
        } else {
          this.pending.push({
            remaining: delay,
            text: action.text ?? "",
            queryId: action.query_id ?? undefined,
          });
        }
      }
      break;
    }
    return out;
  }
}
