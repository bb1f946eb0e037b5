// Grant inbox: pending shell requests with their scopes. Approval is a
// two-step confirmation and displays the one-time secret exactly once;
// the secret is never stored anywhere after dismissal.

import { ApiClient, Grant } from "../types.js";
import { confirmButton, el, errorBox, hashChip, withPending } from "../ui.js";

function secretNotice(secret: string, onDismiss: () => void): HTMLElement {
  const box = el("div", { class: "secret-notice", role: "alert" }, [
    el("p", { class: "secret-warning" }, [
      "Shell secret, shown once. Copy it now; it cannot be recovered.",
    ]),
    el("code", { class: "secret-value" }, [secret]),
  ]);
  const dismiss = el("button", { class: "dismiss-secret" }, ["I copied it"]);
  dismiss.addEventListener("click", () => {
    box.remove();
    onDismiss();
  });
  box.append(dismiss);
  return box;
}

function grantRow(
  api: ApiClient,
  grant: Grant,
  refresh: () => void,
): HTMLElement {
  const row = el("div", { class: "grant-row", "data-grant": grant.grant_id }, [
    el("strong", {}, [grant.display_name]),
    el("span", { class: "scopes" }, [grant.scopes.join(", ")]),
    el("span", { class: "autonomy" }, [`autonomy ${grant.autonomy_level}`]),
    hashChip(grant.shell_id),
  ]);
  const approve = confirmButton("Approve", "Confirm approval", () => {
    void withPending(approve, async () => {
      const result = await api.approveGrant(grant.grant_id);
      row.replaceChildren(
        el("strong", {}, [grant.display_name]),
        secretNotice(result.secret, refresh),
      );
    }).catch((err) => row.append(errorBox((err as Error).message)));
  });
  const revoke = confirmButton("Reject", "Confirm rejection", () => {
    void withPending(revoke, async () => {
      await api.revokeGrant(grant.grant_id);
      refresh();
    }).catch((err) => row.append(errorBox((err as Error).message)));
  });
  row.append(approve, revoke);
  return row;
}

export async function renderGrantInbox(api: ApiClient): Promise<HTMLElement> {
  const root = el("section", { class: "grant-inbox" });
  const refresh = () => {
    void renderGrantInbox(api).then((fresh) => root.replaceWith(fresh));
  };
  try {
    const { grants } = await api.pendingGrants();
    root.append(el("h2", {}, ["Grant inbox"]));
    if (grants.length === 0) {
      root.append(el("p", { class: "empty" }, ["No pending grants."]));
    }
    for (const grant of grants) {
      root.append(grantRow(api, grant, refresh));
    }
  } catch (err) {
    root.append(errorBox(`Could not load grants: ${(err as Error).message}`, refresh));
  }
  return root;
}
