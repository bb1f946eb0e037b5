// Burn confirmation: destroying a knowledge asset requires typing the
// token id prefix before the burn button unlocks. A burn tombstones the
// NFT on-chain; the wallet only ever sends the request.

import { ApiClient } from "../types.js";
import { el, errorBox, hashChip, withPending } from "../ui.js";

export const CONFIRM_PREFIX_LEN = 8;

export function renderBurnConfirm(
  api: ApiClient,
  tokenId: string,
  onBurned?: () => void,
): HTMLElement {
  const prefix = tokenId.slice(0, CONFIRM_PREFIX_LEN);
  const root = el("section", { class: "burn-confirm", "data-token": tokenId }, [
    el("h2", {}, ["Burn asset"]),
    el("p", {}, [
      "This hides the asset permanently (the record itself stays on-chain). ",
      "Type the first ",
      String(CONFIRM_PREFIX_LEN),
      " characters of the token id to confirm: ",
      hashChip(tokenId),
    ]),
  ]);

  const input = el("input", {
    class: "burn-prefix",
    placeholder: prefix,
    autocomplete: "off",
  }) as HTMLInputElement;
  const burn = el("button", { class: "do-burn", disabled: "true" }, [
    "Burn it",
  ]) as HTMLButtonElement;

  input.addEventListener("input", () => {
    burn.disabled = input.value.trim() !== prefix;
  });

  burn.addEventListener("click", () => {
    void withPending(burn, async () => {
      await api.burnToken(tokenId);
      root.replaceChildren(
        el("h2", {}, ["Burn asset"]),
        el("p", { class: "burned" }, ["Burned ", hashChip(tokenId)]),
      );
      onBurned?.();
    }).catch((err) => root.append(errorBox((err as Error).message)));
  });

  root.append(input, burn);
  return root;
}
