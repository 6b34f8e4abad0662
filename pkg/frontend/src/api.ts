import { LexiconRule, Progress, Task } from './types.js';

export type ApiErrorCode =
    | 'lease_expired'
    | 'wrong_claimant'
    | 'invalid_state'
    | 'not_found'
    | 'http_error';

export class ApiError extends Error {
    constructor(
        message: string,
        public readonly code: ApiErrorCode,
        public readonly status: number
    ) {
        super(message);
        this.name = 'ApiError';
    }
}

async function errorFrom(response: Response): Promise<ApiError> {
    let code: ApiErrorCode = response.status === 404 ? 'not_found' : 'http_error';
    let message = `HTTP ${response.status}`;
    try {
        const body = await response.json();
        const detail = body?.detail;
        if (detail && typeof detail === 'object' && detail.code) {
            code = detail.code;
            message = detail.message ?? message;
        } else if (typeof detail === 'string') {
            message = detail;
        }
    } catch {
        // non-JSON error body; keep the status message
    }
    return new ApiError(message, code, response.status);
}

/** Client for the refinement service. Submissions carry text only: the UI
 * never sends labels, uids, or splits back. */
export class RefineApi {
    constructor(private readonly baseUrl: string) {}

    private url(path: string): string {
        return this.baseUrl.replace(/\/$/, '') + path;
    }

    /** Claim the next task for this annotator; null when the queue is drained. */
    async claimNext(annotator: string): Promise<Task | null> {
        const response = await fetch(
            this.url(`/tasks/next?annotator=${encodeURIComponent(annotator)}`)
        );
        if (response.status === 204) {
            return null;
        }
        if (!response.ok) {
            throw await errorFrom(response);
        }
        return (await response.json()) as Task;
    }

    async submit(taskId: number, annotator: string, finalText: string): Promise<Task> {
        const response = await fetch(this.url(`/tasks/${taskId}/submit`), {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ annotator, final_text: finalText })
        });
        if (!response.ok) {
            throw await errorFrom(response);
        }
        return (await response.json()) as Task;
    }

    async progress(): Promise<Progress> {
        const response = await fetch(this.url('/progress'));
        if (!response.ok) {
            throw await errorFrom(response);
        }
        return (await response.json()) as Progress;
    }

    async lexicon(): Promise<LexiconRule[]> {
        const response = await fetch(this.url('/lexicon'));
        if (!response.ok) {
            throw await errorFrom(response);
        }
        const body = await response.json();
        return body.rules as LexiconRule[];
    }
}
