import { describe, expect, it } from "vitest";

import { renderGrantInbox } from "../src/views/grantInbox.js";
import { MockApi, freshState, pendingGrant } from "./mockApi.js";

function click(el: Element | null) {
  (el as HTMLElement).dispatchEvent(new MouseEvent("click", { bubbles: true }));
}

async function settle() {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("grant inbox", () => {
  it("lists pending grants with their requested scopes", async () => {
    const state = freshState();
    state.grants = [pendingGrant("saliency shell"), pendingGrant("capture shell")];
    const view = await renderGrantInbox(new MockApi(state));
    const rows = view.querySelectorAll(".grant-row");
    expect(rows).toHaveLength(2);
    expect(rows[0].textContent).toContain("saliency shell");
    expect(rows[0].querySelector(".scopes")?.textContent).toBe("read_assets, take_quiz");
    expect(rows[0].querySelector(".autonomy")?.textContent).toContain("2");
  });

  it("shows the empty state without grants", async () => {
    const view = await renderGrantInbox(new MockApi());
    expect(view.querySelector(".empty")?.textContent).toContain("No pending grants");
  });

  it("requires a confirmation step before approving", async () => {
    const state = freshState();
    state.grants = [pendingGrant("one shell")];
    const api = new MockApi(state);
    const view = await renderGrantInbox(api);
    const approve = view.querySelector(".confirm-button") as HTMLButtonElement;
    expect(approve.textContent).toBe("Approve");

    click(approve); // arms only
    expect(approve.textContent).toBe("Confirm approval");
    expect(api.calls.filter((c) => c.startsWith("approveGrant"))).toHaveLength(0);

    click(approve); // actually approves
    await settle();
    expect(api.calls.filter((c) => c.startsWith("approveGrant"))).toHaveLength(1);
  });

  it("shows the one-time secret exactly once, with a warning", async () => {
    const state = freshState();
    state.grants = [pendingGrant("secret shell")];
    const api = new MockApi(state);

    const host = document.createElement("div");
    host.append(await renderGrantInbox(api));
    document.body.append(host);

    const approve = host.querySelector(".confirm-button") as HTMLButtonElement;
    click(approve);
    click(approve);
    await settle();

    const secretBox = host.querySelector(".secret-notice")!;
    expect(secretBox.textContent).toContain("shown once");
    const secret = api.issuedSecrets[0];
    expect(host.querySelector(".secret-value")?.textContent).toBe(secret);

    // dismissing removes the secret from the DOM and the refreshed inbox
    click(host.querySelector(".dismiss-secret"));
    await settle();
    expect(host.textContent).not.toContain(secret);
    expect(host.querySelector(".secret-notice")).toBeNull();
    // and the grant is no longer pending
    expect(host.querySelectorAll(".grant-row")).toHaveLength(0);
    host.remove();
  });

  it("revokes after its own confirmation step", async () => {
    const state = freshState();
    state.grants = [pendingGrant("doomed shell")];
    const api = new MockApi(state);
    const host = document.createElement("div");
    host.append(await renderGrantInbox(api));
    document.body.append(host);

    const buttons = host.querySelectorAll(".confirm-button");
    const reject = buttons[1] as HTMLButtonElement;
    expect(reject.textContent).toBe("Reject");
    click(reject);
    click(reject);
    await settle();
    expect(api.calls.filter((c) => c.startsWith("revokeGrant"))).toHaveLength(1);
    expect(state.grants[0].status).toBe("revoked");
    host.remove();
  });
});
