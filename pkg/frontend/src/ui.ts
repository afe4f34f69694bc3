import { AgreementPoller, kappaBand } from "./agreement.js";
import { ApiClient } from "./api.js";
import { Session } from "./session.js";
import type { AgreementResponse } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Renders the one-post-at-a-time labeling flow into `root`. */
export class LabelView {
  private keyHandler: ((ev: KeyboardEvent) => void) | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly session: Session,
  ) {}

  mount(): void {
    this.session.onChange(() => this.render());
    this.keyHandler = (ev: KeyboardEvent) => {
      // digits 1..7 pick the class in scheme order
      const idx = Number.parseInt(ev.key, 10);
      const classes = this.session.visibleClasses();
      if (!Number.isNaN(idx) && idx >= 1 && idx <= classes.length) {
        ev.preventDefault();
        void this.session.choose(classes[idx - 1].id);
      }
    };
    document.addEventListener("keydown", this.keyHandler);
    this.render();
  }

  unmount(): void {
    if (this.keyHandler) document.removeEventListener("keydown", this.keyHandler);
  }

  render(): void {
    const s = this.session.state;
    this.root.replaceChildren();

    const progress = el(
      "div",
      "progress",
      s.total ? `${s.labeled} / ${s.total} labeled` : "",
    );
    this.root.appendChild(progress);

    if (s.phase === "idle" || s.phase === "loading") {
      this.root.appendChild(el("p", "status", "loading..."));
      return;
    }
    if (s.phase === "done") {
      const done = el("div", "done");
      done.appendChild(el("h2", undefined, "All posts labeled"));
      done.appendChild(
        el("p", undefined, `You labeled ${s.labeled} of ${s.total} posts. Thank you.`),
      );
      this.root.appendChild(done);
      return;
    }
    if (s.phase === "error") {
      const banner = el("div", "retry-banner");
      banner.appendChild(
        el("span", undefined, `Submission failed (${s.errorMessage ?? "network error"}). `),
      );
      const retry = el("button", "retry", "Retry");
      retry.addEventListener("click", () => void this.session.retry());
      banner.appendChild(retry);
      this.root.appendChild(banner);
      // fall through: keep the post visible so the annotator sees what is pending
    }

    const post = s.post;
    if (!post) return;
    const card = el("article", "post-card");
    card.appendChild(el("header", "post-context", `${post.board_title} — ${post.thread_title}`));
    card.appendChild(el("p", "post-content", post.content));
    this.root.appendChild(card);

    const buttons = el("div", "class-buttons");
    this.session.visibleClasses().forEach((cls, i) => {
      const btn = el("button", "class-button");
      btn.appendChild(el("span", "key-hint", String(i + 1)));
      btn.appendChild(el("span", "class-name", cls.name));
      btn.title = cls.description;
      btn.disabled = s.phase === "submitting";
      btn.addEventListener("click", () => void this.session.choose(cls.id));
      buttons.appendChild(btn);
    });
    this.root.appendChild(buttons);
  }
}

/** Live agreement panel with the conflict queue and resolution mode. */
export class AgreementView {
  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly sampleId: string,
    private readonly poller: AgreementPoller,
  ) {}

  mount(): void {
    this.poller.onUpdate((a) => this.render(a));
    this.poller.start();
    this.root.replaceChildren(el("p", "status", "loading agreement..."));
  }

  unmount(): void {
    this.poller.stop();
  }

  render(a: AgreementResponse): void {
    this.root.replaceChildren();
    const panel = el("section", "agreement-panel");
    if (a.insufficient_overlap) {
      panel.appendChild(el("p", "status", a.reason ?? "insufficient overlap"));
    } else {
      const kappa = el("div", "kappa");
      // rendered exactly as reported by the server, no recomputation
      kappa.appendChild(el("span", "kappa-value", String(a.value)));
      kappa.appendChild(
        el("span", "kappa-kind", ` (${a.kind}, ${a.n_raters} raters, ${a.n_items} posts)`),
      );
      kappa.appendChild(el("span", "kappa-band", ` ${kappaBand(a.value ?? 0)}`));
      panel.appendChild(kappa);
    }

    const conflicts = el("div", "conflicts");
    conflicts.appendChild(el("h3", undefined, `Conflicts (${a.conflicts.length})`));
    const list = el("ul", "conflict-list");
    for (const postId of a.conflicts) {
      const item = el("li", "conflict-item", postId + " ");
      const resolve = el("button", "resolve", "resolve...");
      resolve.addEventListener("click", () => this.renderResolution(item, postId));
      item.appendChild(resolve);
      list.appendChild(item);
    }
    conflicts.appendChild(list);
    panel.appendChild(conflicts);
    this.root.appendChild(panel);
  }

  private renderResolution(item: HTMLElement, postId: string): void {
    const picker = el("span", "resolution-picker");
    void this.api.scheme().then((scheme) => {
      for (const cls of scheme.classes) {
        const btn = el("button", "resolution-class", cls.name);
        btn.addEventListener("click", () => {
          void this.api
            .submitResolution(this.sampleId, postId, cls.id)
            .then(() => {
              item.replaceChildren(
                document.createTextNode(`${postId} -> ${cls.name}`),
              );
            });
        });
        picker.appendChild(btn);
      }
    });
    item.appendChild(picker);
  }
}
