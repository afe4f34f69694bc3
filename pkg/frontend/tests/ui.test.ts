// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { kappaBand } from "../src/agreement.js";
import { Session } from "../src/session.js";
import { LabelView } from "../src/ui.js";
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

function setup(server: FakeServer) {
  document.body.innerHTML = '<main id="app"></main>';
  const root = document.getElementById("app")!;
  const api = new ApiClient("http://fake", null, server.fetch);
  const session = new Session(api, "s1", "alice");
  const view = new LabelView(root, session);
  view.mount();
  return { root, session, view };
}

function pressKey(key: string) {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

async function settle() {
  // response bodies resolve on macrotasks; give the submit->next chain room
  for (let i = 0; i < 10; i++) {
    await new Promise((r) => setTimeout(r, 0));
  }
}

describe("label view", () => {
  let server: FakeServer;

  beforeEach(() => {
    server = new FakeServer(makePosts(3), makeScheme(SCHEME_IDS));
  });

  it("renders the post with context and one button per class", async () => {
    const { root, session } = setup(server);
    await session.start();
    expect(root.querySelector(".post-content")!.textContent).toBe("post body 0");
    expect(root.querySelector(".post-context")!.textContent).toContain("thread 0");
    const buttons = root.querySelectorAll(".class-button");
    expect(buttons.length).toBe(7);
    // descriptions surface as hover tooltips
    expect((buttons[4] as HTMLButtonElement).title).toBe("posts about spam");
  });

  it("keyboard shortcuts 1..7 submit classes in scheme order", async () => {
    const { session } = setup(server);
    await session.start();
    pressKey("5"); // fifth class in scheme order = spam
    await settle();
    expect(server.labels.get("p000|alice")).toBe("spam");
    pressKey("1");
    await settle();
    expect(server.labels.get("p001|alice")).toBe("not_criminal");
    pressKey("9"); // outside the scheme: ignored
    await settle();
    expect(server.labelCount()).toBe(2);
  });

  it("click submits the class and advances", async () => {
    const { root, session } = setup(server);
    await session.start();
    const buttons = root.querySelectorAll<HTMLButtonElement>(".class-button");
    buttons[2].click();
    await settle();
    expect(server.labels.get("p000|alice")).toBe("bots_malware");
    expect(root.querySelector(".post-content")!.textContent).toBe("post body 1");
  });

  it("shows a retry banner on failure without losing the selection", async () => {
    server.failBeforeSubmit = 1;
    const { root, session } = setup(server);
    await session.start();
    pressKey("5");
    await settle();
    expect(root.querySelector(".retry-banner")).not.toBeNull();
    // the post stays visible behind the banner
    expect(root.querySelector(".post-content")!.textContent).toBe("post body 0");
    (root.querySelector(".retry-banner button") as HTMLButtonElement).click();
    await settle();
    expect(server.labels.get("p000|alice")).toBe("spam");
    expect(root.querySelector(".retry-banner")).toBeNull();
  });

  it("renders the done screen after the last submission", async () => {
    const { root, session } = setup(server);
    await session.start();
    for (const key of ["1", "1", "1"]) {
      pressKey(key);
      await settle();
    }
    expect(session.state.phase).toBe("done");
    expect(root.querySelector(".done")).not.toBeNull();
    expect(root.textContent).toContain("3 of 3");
  });

  it("merged classes are not rendered", async () => {
    const merged = new FakeServer(
      makePosts(1),
      makeScheme(SCHEME_IDS, { spam: "not_criminal" }),
    );
    const { root, session } = setup(merged);
    await session.start();
    const names = [...root.querySelectorAll(".class-name")].map((n) => n.textContent);
    expect(names).toHaveLength(6);
    expect(names).not.toContain("spam");
  });
});

describe("kappa band", () => {
  it("reads values above 0.6 as substantial", () => {
    expect(kappaBand(0.74)).toBe("substantial");
    expect(kappaBand(0.61)).toBe("substantial");
    expect(kappaBand(0.85)).toBe("almost perfect");
    expect(kappaBand(0.5)).toBe("moderate");
  });
});
