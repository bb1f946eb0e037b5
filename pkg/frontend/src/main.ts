import { mountWallet } from "./app.js";

const root = document.getElementById("wallet-root");
if (root) {
  mountWallet(root);
}
