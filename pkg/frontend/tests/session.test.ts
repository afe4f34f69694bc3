import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Session } from "../src/session.js";
import { FakeServer, makePosts, makeScheme } from "./fakeServer.js";

const SCHEME_IDS = [
  "not_criminal",
  "access_to_system",
  "bots_malware",
  "ddos_booting",
  "spam",
  "trading_credentials",
  "vpn_hosting",
];

function makeSession(server: FakeServer, annotator = "alice") {
  const api = new ApiClient("http://fake", null, server.fetch);
  return new Session(api, "s1", annotator);
}

describe("labeling flow", () => {
  it("labels a fresh 3-post sample in order, then reaches the done screen", async () => {
    const server = new FakeServer(makePosts(3), makeScheme(SCHEME_IDS));
    const session = makeSession(server);
    await session.start();

    const seen: string[] = [];
    while (session.state.phase === "labeling") {
      seen.push(session.state.post!.post_id);
      await session.choose("spam");
    }
    expect(seen).toEqual(["p000", "p001", "p002"]);
    expect(session.state.phase).toBe("done");
    expect(session.state.labeled).toBe(3);
    expect(server.labelCount()).toBe(3);
  });

  it("tracks progress counters from the server", async () => {
    const server = new FakeServer(makePosts(4), makeScheme(SCHEME_IDS));
    const session = makeSession(server);
    await session.start();
    expect(session.state.labeled).toBe(0);
    await session.choose("spam");
    expect(session.state.labeled).toBe(1);
    expect(session.state.total).toBe(4);
  });

  it("keeps the selected label and never duplicates it across a network drop", async () => {
    const server = new FakeServer(makePosts(3), makeScheme(SCHEME_IDS));
    // the second submit reaches the server but the response is lost
    server.dropResponseOnSubmit = 2;
    const session = makeSession(server);
    await session.start();
    await session.choose("spam");

    await session.choose("vpn_hosting");
    expect(session.state.phase).toBe("error");
    expect(session.state.pendingClass).toBe("vpn_hosting");
    expect(session.state.post!.post_id).toBe("p001");

    await session.retry();
    expect(session.state.phase).toBe("labeling");
    expect(session.state.post!.post_id).toBe("p002");
    // one label per (post, annotator), the retried value included exactly once
    expect(server.labelCount()).toBe(2);
    expect(server.labels.get("p001|alice")).toBe("vpn_hosting");
  });

  it("also recovers when the failure happens before the server sees it", async () => {
    const server = new FakeServer(makePosts(2), makeScheme(SCHEME_IDS));
    server.failBeforeSubmit = 1;
    const session = makeSession(server);
    await session.start();
    await session.choose("spam");
    expect(session.state.phase).toBe("error");
    expect(server.labelCount()).toBe(0);
    await session.retry();
    expect(server.labelCount()).toBe(1);
    expect(session.state.post!.post_id).toBe("p001");
  });

  it("hides merged-away classes from the button list", async () => {
    const scheme = makeScheme(SCHEME_IDS, { ddos_booting: "not_criminal", spam: "not_criminal" });
    const server = new FakeServer(makePosts(1), scheme);
    const session = makeSession(server);
    await session.start();
    const visible = session.visibleClasses().map((c) => c.id);
    expect(visible).toEqual([
      "not_criminal",
      "access_to_system",
      "bots_malware",
      "trading_credentials",
      "vpn_hosting",
    ]);
  });

  it("two annotators each see the whole sample exactly once", async () => {
    const server = new FakeServer(makePosts(5), makeScheme(SCHEME_IDS));
    const a = makeSession(server, "a");
    const b = makeSession(server, "b");
    await a.start();
    await b.start();
    const seen = { a: [] as string[], b: [] as string[] };
    while (a.state.phase === "labeling" || b.state.phase === "labeling") {
      if (a.state.phase === "labeling") {
        seen.a.push(a.state.post!.post_id);
        await a.choose("spam");
      }
      if (b.state.phase === "labeling") {
        seen.b.push(b.state.post!.post_id);
        await b.choose("not_criminal");
      }
    }
    const expected = makePosts(5).map((p) => p.post_id);
    expect(seen.a).toEqual(expected);
    expect(seen.b).toEqual(expected);
    expect(server.labelCount()).toBe(10);
  });
});
