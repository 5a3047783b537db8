/**
 * Table-driven judge stub speaking the judge line protocol.
 *
 * Requests: {"id", "task", "gold", "pred", "question"?}. Replies with the
 * strict verdict schema {"id", "pred": "yes"|"no", "score": 0-5}; a table miss
 * yields {"pred":"no","score":0}. --malformed-once emits prose for the first
 * request only, to exercise the client's retry path.
 *
 * Usage: node dist/judge.js [--table verdicts.json] [--malformed-once]
 */

import { readFileSync } from "node:fs";
import { createInterface } from "node:readline";

interface TableEntry {
  pred: string;
  gold: string;
  pred_verdict: "yes" | "no";
  score: number;
}

interface JudgeRequest {
  id?: number;
  gold?: string;
  pred?: string;
}

function loadTable(argv: string[]): Map<string, { pred: string; score: number }> {
  const table = new Map<string, { pred: string; score: number }>();
  const index = argv.indexOf("--table");
  if (index !== -1 && index + 1 < argv.length) {
    const entries = JSON.parse(readFileSync(argv[index + 1], "utf-8")) as TableEntry[];
    for (const entry of entries) {
      table.set(JSON.stringify([entry.pred, entry.gold]), {
        pred: entry.pred_verdict,
        score: entry.score,
      });
    }
  }
  return table;
}

export function main(): void {
  const argv = process.argv.slice(2);
  const table = loadTable(argv);
  const malformedOnce = argv.includes("--malformed-once");
  let served = 0;
  const lines = createInterface({ input: process.stdin, terminal: false });

  lines.on("line", (line) => {
    const trimmed = line.trim();
    if (!trimmed) return;
    const request = JSON.parse(trimmed) as JudgeRequest;
    served += 1;
    if (malformedOnce && served === 1) {
      process.stdout.write("Hmm, the prediction looks broadly reasonable to me.\n");
      return;
    }
    const verdict = table.get(JSON.stringify([request.pred ?? "", request.gold ?? ""])) ?? {
      pred: "no",
      score: 0,
    };
    process.stdout.write(
      JSON.stringify({ id: request.id, pred: verdict.pred, score: verdict.score }) + "\n",
    );
  });
}

main();
