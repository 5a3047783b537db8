/**
 * Line protocol records exchanged with the replay harness.
 *
 * harness -> adapter: hello | frame | query | eos
 * adapter -> harness: response* then ack per event; bye after eos.
 */

export interface HelloRecord {
  type: "hello";
  video_id: string;
  task: string;
  fps: number;
}

export interface FrameRecord {
  type: "frame";
  t: number;
  frame_ref: string;
  embedding?: number[];
}

export interface QueryRecord {
  type: "query";
  t: number;
  query_id: string;
  text: string;
}

export interface EosRecord {
  type: "eos";
}

export type HarnessRecord = HelloRecord | FrameRecord | QueryRecord | EosRecord;

export interface ResponseRecord {
  type: "response";
  text: string;
  query_id?: string;
}

export interface AckRecord {
  type: "ack";
}

export interface ByeRecord {
  type: "bye";
}

export type AdapterRecord = ResponseRecord | AckRecord | ByeRecord;

export function parseHarnessRecord(line: string): HarnessRecord {
  const record = JSON.parse(line) as { type?: unknown };
  if (
    record?.type !== "hello" &&
    record?.type !== "frame" &&
    record?.type !== "query" &&
    record?.type !== "eos"
  ) {
    throw new Error(`unknown harness record: ${line}`);
  }
  return record as HarnessRecord;
}

export function serialize(record: AdapterRecord | object): string {
  return JSON.stringify(record);
}
