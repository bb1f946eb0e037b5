// Small DOM helpers shared by the views. No framework: views are plain
// functions from state to elements.

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

/** Abbreviated hash with the full value available on copy/hover. */
export function hashChip(full: string): HTMLElement {
  const short = full.length > 16 ? `${full.slice(0, 8)}…${full.slice(-4)}` : full;
  const chip = el("span", { class: "hash-chip", title: full, "data-full": full }, [short]);
  chip.addEventListener("click", () => {
    void navigator.clipboard?.writeText(full);
  });
  return chip;
}

export function errorBox(message: string, retry?: () => void): HTMLElement {
  const box = el("div", { class: "error-box", role: "alert" }, [message]);
  if (retry) {
    const button = el("button", { class: "retry" }, ["Retry"]);
    button.addEventListener("click", retry);
    box.append(" ", button);
  }
  return box;
}

/**
 * Two-step confirmation: the first activation arms the button, the second
 * fires the action. Every mutating action in the wallet goes through this
 * or an equivalent explicit confirmation.
 */
export function confirmButton(
  label: string,
  confirmLabel: string,
  action: () => void,
): HTMLButtonElement {
  const button = el("button", { class: "confirm-button", "data-armed": "no" }, [label]);
  button.addEventListener("click", () => {
    if (button.dataset.armed !== "yes") {
      button.dataset.armed = "yes";
      button.textContent = confirmLabel;
      return;
    }
    button.dataset.armed = "no";
    button.textContent = label;
    action();
  });
  return button;
}

/** Disable a button for the duration of one in-flight mutation. */
export async function withPending<T>(
  button: HTMLButtonElement,
  work: () => Promise<T>,
): Promise<T> {
  button.disabled = true;
  try {
    return await work();
  } finally {
    button.disabled = false;
  }
}
