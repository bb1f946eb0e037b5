// Dashboard: COG balance, badge cards, knowledge objects with weight
// bars, and model entries. Every number shown comes straight from the
// /assets response.

import { ApiClient, AssetItem } from "../types.js";
import { el, errorBox, hashChip } from "../ui.js";

function badgeCard(item: AssetItem): HTMLElement {
  return el("div", { class: "badge-card", "data-token": item.token_id }, [
    el("div", { class: "trait-code" }, [item.trait_code ?? ""]),
    el("div", { class: "badge-meta" }, [hashChip(item.token_id)]),
  ]);
}

function knowledgeRow(item: AssetItem, onBurn?: (tokenId: string) => void): HTMLElement {
  const weight = item.weight ?? 0;
  const bar = el("div", { class: "weight-bar" }, [
    el("div", {
      class: "weight-fill",
      style: `width: ${(weight * 100).toFixed(2)}%`,
    }),
  ]);
  const row = el("div", { class: "knowledge-row", "data-token": item.token_id }, [
    hashChip(item.token_id),
    el("span", { class: "weight-value" }, [weight.toFixed(6)]),
    bar,
    el("span", { class: "content-len" }, [`${item.content_len} bytes`]),
  ]);
  if (onBurn) {
    const burn = el("button", { class: "burn-link" }, ["Burn…"]);
    burn.addEventListener("click", () => onBurn(item.token_id));
    row.append(burn);
  }
  return row;
}

function modelRow(item: AssetItem): HTMLElement {
  return el("div", { class: "model-row", "data-token": item.token_id }, [
    hashChip(item.token_id),
    el("span", { class: "content-len" }, [`${item.content_len} bytes`]),
  ]);
}

export async function renderDashboard(
  api: ApiClient,
  onBurn?: (tokenId: string) => void,
): Promise<HTMLElement> {
  const root = el("section", { class: "dashboard" });
  try {
    const view = await api.assets();
    const fetchedAt = new Date();
    root.append(
      el("h2", {}, ["Assets"]),
      el("div", { class: "account" }, ["Account: ", hashChip(view.account)]),
      el("div", { class: "cog-balance", "data-balance": String(view.balance) }, [
        `COG: ${view.balance}`,
      ]),
      el(
        "div",
        { class: "freshness", "data-fetched-at": String(fetchedAt.getTime()) },
        [`as of ${fetchedAt.toLocaleTimeString()}`],
      ),
      el("h3", {}, [`Badges (${view.badges.length})`]),
      el("div", { class: "badges" }, view.badges.map(badgeCard)),
      el("h3", {}, [`Knowledge objects (${view.knowledge.length})`]),
      el(
        "div",
        { class: "knowledge" },
        view.knowledge.map((item) => knowledgeRow(item, onBurn)),
      ),
      el("h3", {}, [`Models (${view.models.length})`]),
      el("div", { class: "models" }, view.models.map(modelRow)),
    );
  } catch (err) {
    root.append(
      errorBox(`Could not load assets: ${(err as Error).message}`, () => {
        void renderDashboard(api, onBurn).then((fresh) => root.replaceWith(fresh));
      }),
    );
  }
  return root;
}
