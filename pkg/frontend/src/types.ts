// Shapes of the node API, mirrored verbatim. The wallet never derives
// balances or scores itself; these are display payloads.

export interface ChainHead {
  height: number;
  hash: string;
  prev_hash: string;
  merkle_root: string;
  timestamp: number;
  validator_id: string;
}

export interface AssetItem {
  token_id: string;
  class: string;
  content_root: string;
  content_len: number;
  schema_version: number;
  issuer: string;
  trait_code?: string;
  weight?: number;
}

export interface AssetView {
  account: string;
  balance: number;
  badges: AssetItem[];
  knowledge: AssetItem[];
  models: AssetItem[];
}

export interface Grant {
  grant_id: string;
  shell_id: string;
  display_name: string;
  scopes: string[];
  autonomy_level: number;
  status: string;
  created_at: number;
}

export interface ApprovalResult {
  grant_id: string;
  secret: string;
  status: string;
}

export interface QuizQuestion {
  question_id: string;
  text: string;
  axis: string;
  polarity: number;
}

export interface QuizDefinition {
  questions: QuizQuestion[];
}

export interface QuizSubmitResult {
  recorded: string[];
  badge?: {
    token_id: string;
    trait_code: string;
    axis_scores: number[];
  };
}

export interface ActivityRecordView {
  record_id: string;
  actor: string;
  kind: string;
  shell_id: string;
  captured_at: number;
  url?: string;
  title?: string;
  dwell_seconds?: number;
  query_terms?: string[];
  question_id?: string;
  answer_value?: number;
}

export interface RecordFilter {
  kind?: string;
  token?: string;
  from_ts?: number;
  to_ts?: number;
}

export interface ApiClient {
  chainHead(): Promise<ChainHead>;
  assets(): Promise<AssetView>;
  pendingGrants(): Promise<{ grants: Grant[] }>;
  approveGrant(grantId: string): Promise<ApprovalResult>;
  revokeGrant(grantId: string): Promise<{ grant_id: string; status: string }>;
  quiz(): Promise<QuizDefinition>;
  submitQuizAnswers(answers: Record<string, number>): Promise<QuizSubmitResult>;
  records(filter: RecordFilter): Promise<{ records: ActivityRecordView[] }>;
  burnToken(tokenId: string): Promise<{ token_id: string; status: string }>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}
