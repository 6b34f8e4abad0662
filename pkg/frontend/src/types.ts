// Wire schemas of the refinement service (see the service API table in the
// top-level README). The UI only ever reads these and posts back text.

export interface Task {
    task_id: number;
    uid: string;
    field: 'premise' | 'hypothesis';
    source_text: string;
    machine_text: string;
    suggested_text: string;
    suggested_rule_ids: string[];
    status: 'open' | 'claimed' | 'submitted';
    claimant: string | null;
    claim_expiry: number | null;
    final_text: string | null;
}

export interface Progress {
    open: number;
    claimed: number;
    submitted: number;
    total: number;
    all_submitted: boolean;
    by_annotator: Record<string, number>;
}

export interface LexiconRule {
    rule_id: string;
    pattern: string;
    action: 'keep_english' | 'expand_vietnamese' | 'replace_vietnamese_abbrev';
    replacement: string;
    case_sensitive: boolean;
    notes: string;
}
