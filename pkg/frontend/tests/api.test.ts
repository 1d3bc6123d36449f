import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

import { ApiError, Client, buildQuery, describeError } from "../src/api.js";
import type { AdaptResponse, SessionRecord } from "../src/types.js";

const fixture = (name: string): unknown =>
  JSON.parse(
    readFileSync(
      fileURLToPath(new URL(`../../tests/fixtures/${name}`, import.meta.url)),
      "utf-8",
    ),
  );

const row1 = fixture("row1_adapt.json") as AdaptResponse;
const session = fixture("row1_session.json") as SessionRecord;
const handbooks = fixture("handbooks.json") as { handbooks: unknown[] };

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

interface Recorded {
  url: string;
  init?: RequestInit;
}

function stubFetch(status: number, body: unknown, log: Recorded[] = []) {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    log.push({ url, init });
    return jsonResponse(status, body);
  };
}

test("blank situation submits normal status", () => {
  const query = buildQuery({
    target_jurisdiction: "nyc",
    nominal_plan: "Turn right on red",
    unexpected_situation: "   ",
  });
  assert.equal(query.unexpected_situation, "normal status");
});

test("missing situation submits normal status", () => {
  const query = buildQuery({
    target_jurisdiction: "nyc",
    nominal_plan: "Turn right on red",
  });
  assert.equal(query.unexpected_situation, "normal status");
});

test("non-blank situation passes through", () => {
  const query = buildQuery({
    target_jurisdiction: "nyc",
    nominal_plan: "Turn right",
    unexpected_situation: "someone honks at me",
  });
  assert.equal(query.unexpected_situation, "someone honks at me");
});

test("blank origin falls back to california", () => {
  const query = buildQuery({ target_jurisdiction: "nyc", nominal_plan: "x" });
  assert.equal(query.origin_jurisdiction, "california");
});

test("adapt posts the filled query to /v1/adapt", async () => {
  const log: Recorded[] = [];
  const client = new Client("http://svc", stubFetch(200, row1, log));
  const result = await client.adapt({
    target_jurisdiction: "nyc",
    nominal_plan: "Turn right on red",
    unexpected_situation: "",
  });
  assert.equal(result.instruction, row1.instruction);
  assert.equal(log.length, 1);
  assert.equal(log[0]!.url, "http://svc/v1/adapt");
  const sent = JSON.parse(String(log[0]!.init?.body));
  assert.equal(sent.unexpected_situation, "normal status");
  assert.equal(sent.target_jurisdiction, "nyc");
});

test("listHandbooks unwraps the handbook array", async () => {
  const client = new Client("http://svc", stubFetch(200, handbooks));
  const metas = await client.listHandbooks();
  assert.equal(metas.length, 6);
});

test("getSession returns the stored record", async () => {
  const client = new Client("http://svc/", stubFetch(200, session));
  const record = await client.getSession("fixture-trace-0001");
  assert.equal(record.plan.instruction, row1.instruction);
});

test("error body maps to ApiError with code", async () => {
  const client = new Client(
    "http://svc",
    stubFetch(404, { code: "unknown_jurisdiction", detail: "atlantis" }),
  );
  await assert.rejects(
    client.adapt({ target_jurisdiction: "atlantis", nominal_plan: "x" }),
    (err: unknown) => {
      assert.ok(err instanceof ApiError);
      assert.equal(err.status, 404);
      assert.equal(err.code, "unknown_jurisdiction");
      return true;
    },
  );
});

test("network failure maps to offline-ish error", async () => {
  const client = new Client("http://svc", async () => {
    throw new TypeError("fetch failed");
  });
  await assert.rejects(
    client.listHandbooks(),
    (err: unknown) => err instanceof ApiError && err.code === "network",
  );
});

test("describeError routes codes to fields", () => {
  assert.deepEqual(
    describeError(new ApiError(404, "unknown_jurisdiction", "x")),
    { field: "target", message: "No handbook for that jurisdiction." },
  );
  assert.equal(
    describeError(new ApiError(400, "missing_field:nominal_plan", "x")).field,
    "plan",
  );
  assert.equal(
    describeError(new ApiError(404, "unknown_session", "x")).message,
    "Session expired.",
  );
  assert.equal(describeError(new ApiError(504, "timeout", "x")).field, "form");
});
