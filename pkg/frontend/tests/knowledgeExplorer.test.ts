import { describe, expect, it } from "vitest";

import { renderKnowledgeExplorer } from "../src/views/knowledgeExplorer.js";
import { MockApi, fakeHash, freshState } from "./mockApi.js";

async function settle() {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

function fixtureRecords() {
  return [
    {
      record_id: fakeHash("r1"),
      actor: fakeHash("actor"),
      kind: "PageVisit",
      shell_id: fakeHash("shell"),
      captured_at: 100,
      url: "https://a.example/1",
      title: "rust news",
    },
    {
      record_id: fakeHash("r2"),
      actor: fakeHash("actor"),
      kind: "Search",
      shell_id: fakeHash("shell"),
      captured_at: 200,
      query_terms: ["cooking", "pasta"],
    },
  ];
}

describe("knowledge explorer", () => {
  it("runs a query and renders the rows returned", async () => {
    const state = freshState();
    state.records = fixtureRecords();
    const api = new MockApi(state);
    const view = renderKnowledgeExplorer(api);
    (view.querySelector(".run-query") as HTMLButtonElement).click();
    await settle();
    const rows = view.querySelectorAll(".record-row");
    expect(rows).toHaveLength(2);
    expect(rows[0].textContent).toContain("rust news");
    expect(rows[1].textContent).toContain("cooking pasta");
  });

  it("passes kind, token, and time filters through to the API", async () => {
    const api = new MockApi();
    const view = renderKnowledgeExplorer(api);
    (view.querySelector(".filter-kind") as HTMLSelectElement).value = "Search";
    (view.querySelector(".filter-token") as HTMLInputElement).value = "rust";
    (view.querySelector(".filter-from") as HTMLInputElement).value = "50";
    (view.querySelector(".filter-to") as HTMLInputElement).value = "250";
    (view.querySelector(".run-query") as HTMLButtonElement).click();
    await settle();
    expect(api.lastRecordFilter).toEqual({
      kind: "Search",
      token: "rust",
      from_ts: 50,
      to_ts: 250,
    });
  });

  it("shows an empty marker when nothing matches", async () => {
    const api = new MockApi();
    const view = renderKnowledgeExplorer(api);
    (view.querySelector(".run-query") as HTMLButtonElement).click();
    await settle();
    expect(view.querySelector(".results .empty")?.textContent).toContain("no records");
  });

  it("renders query errors inline", async () => {
    const api = new MockApi();
    api.records = async () => {
      throw new Error("query failed");
    };
    const view = renderKnowledgeExplorer(api);
    (view.querySelector(".run-query") as HTMLButtonElement).click();
    await settle();
    expect(view.querySelector(".error-box")?.textContent).toContain("query failed");
  });
});
