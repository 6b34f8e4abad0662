import { escapeHtml } from './highlight.js';

export type DiffOp =
    | { kind: 'equal'; text: string }
    | { kind: 'removed'; text: string }
    | { kind: 'added'; text: string };

/** Token-level diff (LCS) between the machine text and the edit buffer, so
 * reviewers can see exactly what the annotator changed. */
export function tokenDiff(before: string, after: string): DiffOp[] {
    const a = before.split(/\s+/).filter((t) => t.length > 0);
    const b = after.split(/\s+/).filter((t) => t.length > 0);
    const rows = a.length + 1;
    const cols = b.length + 1;
    const table: number[] = new Array(rows * cols).fill(0);
    for (let i = a.length - 1; i >= 0; i--) {
        for (let j = b.length - 1; j >= 0; j--) {
            table[i * cols + j] =
                a[i] === b[j]
                    ? (table[(i + 1) * cols + j + 1] ?? 0) + 1
                    : Math.max(table[(i + 1) * cols + j] ?? 0, table[i * cols + j + 1] ?? 0);
        }
    }
    const ops: DiffOp[] = [];
    const push = (kind: DiffOp['kind'], text: string) => {
        const last = ops[ops.length - 1];
        if (last && last.kind === kind) {
            last.text += ` ${text}`;
        } else {
            ops.push({ kind, text });
        }
    };
    let i = 0;
    let j = 0;
    while (i < a.length && j < b.length) {
        if (a[i] === b[j]) {
            push('equal', a[i] ?? '');
            i++;
            j++;
        } else if ((table[(i + 1) * cols + j] ?? 0) >= (table[i * cols + j + 1] ?? 0)) {
            push('removed', a[i] ?? '');
            i++;
        } else {
            push('added', b[j] ?? '');
            j++;
        }
    }
    for (; i < a.length; i++) {
        push('removed', a[i] ?? '');
    }
    for (; j < b.length; j++) {
        push('added', b[j] ?? '');
    }
    return ops;
}

export function renderDiff(ops: DiffOp[]): string {
    return ops
        .map((op) => {
            const text = escapeHtml(op.text);
            switch (op.kind) {
                case 'equal':
                    return `<span class="diff-equal">${text}</span>`;
                case 'removed':
                    return `<del class="diff-removed">${text}</del>`;
                case 'added':
                    return `<ins class="diff-added">${text}</ins>`;
            }
        })
        .join(' ');
}
