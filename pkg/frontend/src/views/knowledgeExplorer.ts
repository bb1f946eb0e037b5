// Knowledge explorer: memory-pool queries with kind, time, and token
// filters, rendered as a table of activity records.

import { ApiClient, ActivityRecordView, RecordFilter } from "../types.js";
import { el, errorBox, hashChip } from "../ui.js";

const KINDS = ["", "PageVisit", "Search", "Bookmark", "QuizAnswer", "ShellEvent"];

function recordRow(rec: ActivityRecordView): HTMLElement {
  const what =
    rec.title ?? rec.url ?? (rec.query_terms ? rec.query_terms.join(" ") : "") ??
    rec.question_id ?? "";
  return el("tr", { class: "record-row", "data-record": rec.record_id }, [
    el("td", {}, [String(rec.captured_at)]),
    el("td", {}, [rec.kind]),
    el("td", {}, [what ?? ""]),
    el("td", {}, [hashChip(rec.record_id)]),
  ]);
}

export function renderKnowledgeExplorer(api: ApiClient): HTMLElement {
  const root = el("section", { class: "knowledge-explorer" }, [
    el("h2", {}, ["Memory pool"]),
  ]);

  const kindSelect = el("select", { class: "filter-kind" }) as HTMLSelectElement;
  for (const kind of KINDS) {
    kindSelect.append(el("option", { value: kind }, [kind || "any kind"]));
  }
  const tokenInput = el("input", {
    class: "filter-token",
    placeholder: "token",
  }) as HTMLInputElement;
  const fromInput = el("input", {
    class: "filter-from",
    placeholder: "from ts",
    type: "number",
  }) as HTMLInputElement;
  const toInput = el("input", {
    class: "filter-to",
    placeholder: "to ts",
    type: "number",
  }) as HTMLInputElement;
  const search = el("button", { class: "run-query" }, ["Search"]) as HTMLButtonElement;
  const results = el("tbody", { class: "results" });

  root.append(
    el("div", { class: "filters" }, [kindSelect, tokenInput, fromInput, toInput, search]),
    el("table", { class: "records-table" }, [
      el("thead", {}, [
        el("tr", {}, [
          el("th", {}, ["captured"]),
          el("th", {}, ["kind"]),
          el("th", {}, ["what"]),
          el("th", {}, ["record"]),
        ]),
      ]),
      results,
    ]),
  );

  const run = async () => {
    const filter: RecordFilter = {};
    if (kindSelect.value) filter.kind = kindSelect.value;
    if (tokenInput.value.trim()) filter.token = tokenInput.value.trim();
    if (fromInput.value) filter.from_ts = Number(fromInput.value);
    if (toInput.value) filter.to_ts = Number(toInput.value);
    try {
      const { records } = await api.records(filter);
      results.replaceChildren(...records.map(recordRow));
      if (records.length === 0) {
        results.append(
          el("tr", { class: "empty" }, [el("td", { colspan: "4" }, ["no records"])]),
        );
      }
    } catch (err) {
      results.replaceChildren(
        el("tr", {}, [
          el("td", { colspan: "4" }, [errorBox((err as Error).message, run)]),
        ]),
      );
    }
  };
  search.addEventListener("click", () => void run());
  return root;
}
