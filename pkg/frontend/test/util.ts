import { readFileSync } from "node:fs";
import { join } from "node:path";
import { parseServerMessage, type StateMessage } from "../src/messages.js";

export const LOG = join(__dirname, "fixtures", "session.log");

/** Raw state lines from the recorded session (the log also carries a header
 * line and the command records, which the UI never receives). */
export function stateLines(): string[] {
  return readFileSync(LOG, "utf8")
    .trim()
    .split("\n")
    .filter((l) => (JSON.parse(l) as { type?: string }).type === "state");
}

export function someStates(n: number): StateMessage[] {
  return stateLines()
    .slice(0, n)
    .map((l) => {
      const msg = parseServerMessage(l);
      if (msg.type !== "state") throw new Error("fixture holds non-state line");
      return msg;
    });
}
