import type { NextQueryPayload, ResponseBody } from "./types.js";

export type Choice = "correct" | "incorrect";

/** Build the response body for the pending query.
 *
 * The stimulus array is passed through untouched from the last /next payload
 * so the server-side match against the pending query cannot drift. */
export function buildResponsePayload(pending: NextQueryPayload, choice: Choice): ResponseBody {
  return {
    stimulus: pending.stimulus.slice(),
    response: choice === "correct" ? 1 : 0,
  };
}

export function choiceFromKey(key: string): Choice | null {
  if (key === "c" || key === "1" || key === "y") return "correct";
  if (key === "i" || key === "0" || key === "n") return "incorrect";
  return null;
}
