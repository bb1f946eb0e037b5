// Wallet shell: unlock screen, navigation, and view mounting. The owner
// credential is held in a closure for the session only; a 401 from any
// view tears the session down and returns to the unlock screen.

import { HttpApiClient, makeOwnerSigner } from "./api.js";
import { ApiClient, ApiError } from "./types.js";
import { el, errorBox } from "./ui.js";
import { renderBurnConfirm } from "./views/burnConfirm.js";
import { renderDashboard } from "./views/dashboard.js";
import { renderGrantInbox } from "./views/grantInbox.js";
import { renderKnowledgeExplorer } from "./views/knowledgeExplorer.js";
import { renderQuizPanel } from "./views/quizPanel.js";

type ViewName = "dashboard" | "grants" | "quiz" | "explorer";

/** Every API call goes through this guard: a 401 anywhere locks the wallet. */
export function lockOn401(api: ApiClient, onLock: () => void): ApiClient {
  function wrap<A extends unknown[], R>(fn: (...args: A) => Promise<R>) {
    return async (...args: A): Promise<R> => {
      try {
        return await fn(...args);
      } catch (err) {
        if (err instanceof ApiError && err.status === 401) {
          onLock();
        }
        throw err;
      }
    };
  }
  return {
    chainHead: wrap(api.chainHead.bind(api)),
    assets: wrap(api.assets.bind(api)),
    pendingGrants: wrap(api.pendingGrants.bind(api)),
    approveGrant: wrap(api.approveGrant.bind(api)),
    revokeGrant: wrap(api.revokeGrant.bind(api)),
    quiz: wrap(api.quiz.bind(api)),
    submitQuizAnswers: wrap(api.submitQuizAnswers.bind(api)),
    records: wrap(api.records.bind(api)),
    burnToken: wrap(api.burnToken.bind(api)),
  };
}

export function renderUnlock(
  onUnlock: (nodeUrl: string, accountKeyHex: string) => void,
): HTMLElement {
  const root = el("section", { class: "unlock" }, [el("h2", {}, ["Unlock wallet"])]);
  const nodeInput = el("input", {
    class: "node-url",
    value: "http://127.0.0.1:8545",
  }) as HTMLInputElement;
  const keyInput = el("input", {
    class: "account-key",
    type: "password",
    placeholder: "account private key (hex)",
    autocomplete: "off",
  }) as HTMLInputElement;
  const unlock = el("button", { class: "do-unlock" }, ["Unlock"]);
  unlock.addEventListener("click", () => {
    onUnlock(nodeInput.value.trim(), keyInput.value.trim());
    keyInput.value = "";
  });
  root.append(
    el("label", {}, ["Node URL ", nodeInput]),
    el("label", {}, ["Account key ", keyInput]),
    el("p", { class: "note" }, [
      "The key stays in memory for this tab only; it is never persisted.",
    ]),
    unlock,
  );
  return root;
}

export class WalletApp {
  private current: ViewName = "dashboard";
  private api: ApiClient;

  constructor(
    private root: HTMLElement,
    api: ApiClient,
    private onLock: () => void,
  ) {
    this.api = lockOn401(api, onLock);
  }

  async show(view: ViewName): Promise<void> {
    this.current = view;
    const body = el("div", { class: "view-body" });
    const nav = el("nav", { class: "wallet-nav" });
    for (const [name, label] of [
      ["dashboard", "Dashboard"],
      ["grants", "Grant inbox"],
      ["quiz", "Quiz"],
      ["explorer", "Memory"],
    ] as [ViewName, string][]) {
      const button = el(
        "button",
        { class: name === view ? "nav-active" : "nav", "data-view": name },
        [label],
      );
      button.addEventListener("click", () => void this.show(name));
      nav.append(button);
    }
    this.root.replaceChildren(nav, body);
    try {
      if (view === "dashboard") {
        body.append(
          await renderDashboard(this.api, (tokenId) => {
            body.replaceChildren(this.burnFlow(tokenId));
          }),
        );
      }
      else if (view === "grants") body.append(await renderGrantInbox(this.api));
      else if (view === "quiz") body.append(await renderQuizPanel(this.api));
      else body.append(renderKnowledgeExplorer(this.api));
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.onLock();
        return;
      }
      body.append(errorBox((err as Error).message, () => void this.show(this.current)));
    }
  }

  burnFlow(tokenId: string): HTMLElement {
    return renderBurnConfirm(this.api, tokenId, () => void this.show("dashboard"));
  }
}

export function mountWallet(root: HTMLElement): void {
  const lock = () => {
    root.replaceChildren(
      renderUnlock((nodeUrl, keyHex) => {
        void makeOwnerSigner(keyHex)
          .then((signer) => {
            const api = new HttpApiClient(nodeUrl, signer);
            const app = new WalletApp(root, api, lock);
            void app.show("dashboard");
          })
          .catch((err) => {
            root.append(errorBox(`Bad key: ${(err as Error).message}`));
          });
      }),
    );
  };
  lock();
}
