// End-to-end flow against the real refinement service: seed a store, spawn
// the server, and drive the annotator loop the way app.ts does (claim,
// render, accept suggestion, submit) until the export gate opens.

import { ChildProcess, spawn } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join, resolve } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { RefineApi } from '../src/api.js';
import { LexiconRule, Task } from '../src/types.js';
import { renderDone, renderProgress, renderTask } from '../src/view.js';

const REPO_ROOT = resolve(__dirname, '..', '..');
const PORT = 8200 + Math.floor(Math.random() * 500);
const BASE_URL = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let serverLog = '';
const api = new RefineApi(BASE_URL);

function machineExamples(): string {
    const rows = [
        {
            uid: 'dev-0',
            premise: 'Bệnh nhân không có PMH',
            hypothesis: 'Bệnh nhân khỏe mạnh',
            label: 'entailment',
            split: 'dev',
            state: 'machine',
            source_premise: 'Patient has no PMH',
            source_hypothesis: 'Patient is healthy'
        },
        {
            uid: 'dev-1',
            premise: 'Điện tâm đồ cho thấy không có thay đổi về QRS',
            hypothesis: 'Tim bình thường',
            label: 'neutral',
            split: 'dev',
            state: 'machine',
            source_premise: 'Electrocardiograms revealed no QRS changes',
            source_hypothesis: 'The heart is normal'
        }
    ];
    return rows.map((row) => JSON.stringify(row)).join('\n') + '\n';
}

async function waitForServer(timeoutMs = 30000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        try {
            await api.progress();
            return;
        } catch {
            if (server && server.exitCode !== null) {
                throw new Error(`service exited early:\n${serverLog}`);
            }
            await new Promise((r) => setTimeout(r, 200));
        }
    }
    throw new Error(`service did not come up on ${BASE_URL}:\n${serverLog}`);
}

beforeAll(async () => {
    const workDir = mkdtempSync(join(tmpdir(), 'refine-e2e-'));
    const examplesPath = join(workDir, 'machine.jsonl');
    writeFileSync(examplesPath, machineExamples(), 'utf-8');
    server = spawn(
        'python3',
        [
            '-m',
            'vimedkit.cli',
            'nli-refine-serve',
            '--store',
            join(workDir, 'tasks.db'),
            '--in',
            examplesPath,
            '--abbrev-lexicon',
            join(REPO_ROOT, 'data', 'abbrev_lexicon.tsv'),
            '--host',
            '127.0.0.1',
            '--port',
            String(PORT)
        ],
        { cwd: REPO_ROOT }
    );
    server.stdout?.on('data', (chunk) => (serverLog += chunk));
    server.stderr?.on('data', (chunk) => (serverLog += chunk));
    await waitForServer();
}, 40000);

afterAll(() => {
    server?.kill('SIGTERM');
});

describe('annotator flow against a live service', () => {
    it('claims, renders the three-pane view with highlights, and submits', async () => {
        const rules: LexiconRule[] = await api.lexicon();
        expect(rules.map((rule) => rule.rule_id)).toContain('pmh');

        const before = await api.progress();
        expect(before.total).toBe(4);
        expect(before.all_submitted).toBe(false);
        expect(renderProgress(before)).toContain('gate-closed');

        const task = (await api.claimNext('e2e-annotator')) as Task;
        expect(task).not.toBeNull();
        expect(task.status).toBe('claimed');

        const html = renderTask(task, rules);
        expect(html).toContain('English source');
        expect(html).toContain('Machine translation');
        expect(html).toContain('Suggestion (rules applied)');
        if (task.suggested_rule_ids.length > 0) {
            expect(html).toContain('<mark class="abbrev"');
        }

        // Accept-suggestion path: submit the suggested text verbatim.
        const submitted = await api.submit(
            task.task_id,
            'e2e-annotator',
            task.suggested_text
        );
        expect(submitted.status).toBe('submitted');
        expect(submitted.final_text).toBe(task.suggested_text);

        const after = await api.progress();
        expect(after.submitted).toBe(before.submitted + 1);
        expect(after.total).toBe(4);
    }, 30000);

    it('sees the expansion suggestion for the abbreviation task', async () => {
        const rules = await api.lexicon();
        const claimed: Task[] = [];
        let task: Task | null;
        while ((task = await api.claimNext('peeker')) !== null) {
            claimed.push(task);
        }
        const withPmh = claimed.find((t) => t.machine_text.includes('PMH'));
        if (withPmh) {
            expect(withPmh.suggested_text).toContain('tiền sử bệnh');
            expect(withPmh.suggested_rule_ids).toContain('pmh');
            const html = renderTask(withPmh, rules);
            expect(html).toContain('data-rule="pmh"');
        }
        // Put everything back into flight by submitting, finishing the queue.
        for (const held of claimed) {
            await api.submit(held.task_id, 'peeker', held.suggested_text);
        }
    }, 30000);

    it('opens the export gate only at 100% submitted and shows done screen', async () => {
        const progress = await api.progress();
        expect(progress.submitted).toBe(4);
        expect(progress.all_submitted).toBe(true);
        expect(renderProgress(progress)).toContain('gate-open');

        const drained = await api.claimNext('e2e-annotator');
        expect(drained).toBeNull();
        expect(renderDone(progress)).toContain('Queue drained');
    }, 30000);
});
