/**
 * Reference adapter process: reads harness records on stdin, answers per a
 * script file, and yields with ack after every event (bye after eos).
 *
 * Usage: node dist/adapter.js --script rules.json
 */

import { readFileSync } from "node:fs";
import { createInterface } from "node:readline";
import { parseHarnessRecord, serialize } from "./protocol.js";
import { ScriptEngine, type Script } from "./script.js";

function loadScript(argv: string[]): Script {
  const index = argv.indexOf("--script");
  if (index === -1 || index + 1 >= argv.length) {
    // default: silence on every event
    return { rules: [{ trigger: { kind: "always" }, action: { kind: "silence" } }] };
  }
  return JSON.parse(readFileSync(argv[index + 1], "utf-8")) as Script;
}

export function main(): void {
  const script = loadScript(process.argv.slice(2));
  const engine = new ScriptEngine(script);
  const lines = createInterface({ input: process.stdin, terminal: false });

  lines.on("line", (line) => {
    const trimmed = line.trim();
    if (!trimmed) return;
    let event;
    try {
      event = parseHarnessRecord(trimmed);
    } catch (error) {
      process.stderr.write(`protocol desync: ${String(error)}\n`);
      process.exit(2);
    }
    if (event.type === "eos") {
      engine.onEvent(event);
      process.stdout.write(serialize({ type: "bye" }) + "\n");
      process.exit(0);
    }
    for (const response of engine.onEvent(event)) {
      process.stdout.write(serialize(response) + "\n");
    }
    process.stdout.write(serialize({ type: "ack" }) + "\n");
  });
}

main();
