// HTTP client for the node API. Owner requests are signed with the
// account key via WebCrypto Ed25519; the key lives in memory only and is
// never written to browser storage.

import {
  ApiClient,
  ApiError,
  ApprovalResult,
  AssetView,
  ChainHead,
  QuizDefinition,
  QuizSubmitResult,
  RecordFilter,
  ActivityRecordView,
  Grant,
} from "./types.js";

export interface OwnerSigner {
  pubkeyHex(): string;
  sign(message: Uint8Array<ArrayBuffer>): Promise<string>;
}

function hexToBytes(hex: string): Uint8Array<ArrayBuffer> {
  if (hex.length % 2 !== 0 || /[^0-9a-fA-F]/.test(hex)) {
    throw new Error("invalid hex");
  }
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

function bytesToHex(bytes: ArrayBuffer | Uint8Array): string {
  const view = bytes instanceof Uint8Array ? bytes : new Uint8Array(bytes);
  return Array.from(view, (b) => b.toString(16).padStart(2, "0")).join("");
}

// PKCS#8 prefix for a raw Ed25519 private key (RFC 8410).
const PKCS8_ED25519_PREFIX = hexToBytes("302e020100300506032b657004220420");

/** Build a signer from a 32-byte raw Ed25519 private key in hex. */
export async function makeOwnerSigner(privateKeyHex: string): Promise<OwnerSigner> {
  const raw = hexToBytes(privateKeyHex.trim());
  if (raw.length !== 32) {
    throw new Error("account key must be 32 bytes of hex");
  }
  const pkcs8 = new Uint8Array(PKCS8_ED25519_PREFIX.length + raw.length);
  pkcs8.set(PKCS8_ED25519_PREFIX);
  pkcs8.set(raw, PKCS8_ED25519_PREFIX.length);
  const key = await crypto.subtle.importKey("pkcs8", pkcs8, { name: "Ed25519" }, true, [
    "sign",
  ]);
  const jwk = await crypto.subtle.exportKey("jwk", key);
  // the JWK "x" member is the base64url raw public key
  const pub = Uint8Array.from(
    atob((jwk.x ?? "").replace(/-/g, "+").replace(/_/g, "/")),
    (c) => c.charCodeAt(0),
  );
  return {
    pubkeyHex: () => bytesToHex(pub),
    sign: async (message) =>
      bytesToHex(await crypto.subtle.sign({ name: "Ed25519" }, key, message)),
  };
}

export class HttpApiClient implements ApiClient {
  constructor(
    private baseUrl: string,
    private signer: OwnerSigner,
    private fetchFn: typeof fetch = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const payload = body === undefined ? "" : JSON.stringify(body);
    const message = new TextEncoder().encode(`${method}\n${path}\n${payload}`);
    const headers: Record<string, string> = {
      "x-owner-pubkey": this.signer.pubkeyHex(),
      "x-owner-signature": await this.signer.sign(message),
    };
    if (payload) headers["content-type"] = "application/json";
    const resp = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: payload || undefined,
    });
    const text = await resp.text();
    const parsed = text ? JSON.parse(text) : {};
    if (!resp.ok) {
      throw new ApiError(resp.status, parsed.code ?? "error", parsed.message ?? text);
    }
    return parsed as T;
  }

  chainHead(): Promise<ChainHead> {
    return this.request("GET", "/chain/head");
  }

  assets(): Promise<AssetView> {
    return this.request("GET", "/assets");
  }

  pendingGrants(): Promise<{ grants: Grant[] }> {
    return this.request("GET", "/grants/pending");
  }

  approveGrant(grantId: string): Promise<ApprovalResult> {
    return this.request("POST", `/grants/${grantId}/approve`, {});
  }

  revokeGrant(grantId: string): Promise<{ grant_id: string; status: string }> {
    return this.request("POST", `/grants/${grantId}/revoke`, {});
  }

  quiz(): Promise<QuizDefinition> {
    return this.request("GET", "/quiz");
  }

  submitQuizAnswers(answers: Record<string, number>): Promise<QuizSubmitResult> {
    return this.request("POST", "/quiz/answers", { answers });
  }

  records(filter: RecordFilter): Promise<{ records: ActivityRecordView[] }> {
    const params = new URLSearchParams();
    if (filter.kind) params.set("kind", filter.kind);
    if (filter.token) params.set("token", filter.token);
    if (filter.from_ts !== undefined) params.set("from_ts", String(filter.from_ts));
    if (filter.to_ts !== undefined) params.set("to_ts", String(filter.to_ts));
    const qs = params.toString();
    return this.request("GET", qs ? `/records?${qs}` : "/records");
  }

  burnToken(tokenId: string): Promise<{ token_id: string; status: string }> {
    return this.request("POST", `/tokens/${tokenId}/burn`, {});
  }
}
