import { ApiError, RefineApi } from './api.js';
import { renderDiff, tokenDiff } from './diff.js';
import { LexiconRule, Task } from './types.js';
import { renderDone, renderError, renderNotice, renderProgress, renderTask } from './view.js';

const params = new URLSearchParams(window.location.search);
const serviceUrl = params.get('service') ?? 'http://127.0.0.1:8040';
const api = new RefineApi(serviceUrl);

let annotator = params.get('annotator') ?? localStorage.getItem('annotator') ?? '';
let rules: LexiconRule[] = [];
let currentTask: Task | null = null;

const app = document.getElementById('app') as HTMLElement;
const progressHost = document.getElementById('progress-host') as HTMLElement;
const noticeHost = document.getElementById('notice-host') as HTMLElement;

function editBuffer(): HTMLTextAreaElement | null {
    return document.getElementById('edit-buffer') as HTMLTextAreaElement | null;
}

async function refreshProgress(): Promise<void> {
    try {
        progressHost.innerHTML = renderProgress(await api.progress());
    } catch (error) {
        console.error('progress fetch failed', error);
    }
}

function wireTaskActions(task: Task): void {
    const buffer = editBuffer();
    const diffView = document.getElementById('diff-view');
    const submitBtn = document.getElementById('submit-btn') as HTMLButtonElement | null;
    const syncButtonState = () => {
        if (submitBtn && buffer) {
            submitBtn.disabled = buffer.value.trim() === '';
        }
    };
    syncButtonState();
    buffer?.addEventListener('input', () => {
        if (diffView && buffer) {
            diffView.innerHTML = renderDiff(tokenDiff(task.machine_text, buffer.value));
        }
        syncButtonState();
    });
    document.getElementById('accept-btn')?.addEventListener('click', () => {
        if (buffer) {
            buffer.value = task.suggested_text;
            buffer.dispatchEvent(new Event('input'));
            void submitCurrent();
        }
    });
    document.getElementById('submit-btn')?.addEventListener('click', () => {
        void submitCurrent();
    });
}

async function submitCurrent(): Promise<void> {
    const task = currentTask;
    const buffer = editBuffer();
    if (!task || !buffer) {
        return;
    }
    const finalText = buffer.value.trim();
    if (!finalText) {
        noticeHost.innerHTML = renderNotice('Final text must be non-empty.');
        return;
    }
    try {
        await api.submit(task.task_id, annotator, finalText);
    } catch (error) {
        if (error instanceof ApiError && error.code === 'lease_expired') {
            // The claim lapsed; the task is open again. Fetch a fresh one
            // without losing the annotator's place in the queue.
            noticeHost.innerHTML = renderNotice(
                'Your claim expired; the task went back to the queue. Loading the next one.'
            );
            await nextTask();
            return;
        }
        const message = error instanceof Error ? error.message : String(error);
        app.insertAdjacentHTML('beforebegin', renderError(message));
        document.getElementById('retry-btn')?.addEventListener('click', () => {
            document.querySelector('.error-banner')?.remove();
            void submitCurrent(); // edits stay in the buffer
        });
        return;
    }
    noticeHost.innerHTML = '';
    await refreshProgress();
    await nextTask();
}

async function nextTask(): Promise<void> {
    try {
        currentTask = await api.claimNext(annotator);
    } catch (error) {
        const message = error instanceof Error ? error.message : String(error);
        app.innerHTML = renderError(message);
        document.getElementById('retry-btn')?.addEventListener('click', () => {
            void nextTask();
        });
        return;
    }
    if (currentTask === null) {
        app.innerHTML = renderDone(await api.progress());
        return;
    }
    app.innerHTML = renderTask(currentTask, rules);
    wireTaskActions(currentTask);
    editBuffer()?.focus();
}

function wireShortcuts(): void {
    document.addEventListener('keydown', (event) => {
        if (event.key === 'Enter' && (event.ctrlKey || event.metaKey)) {
            event.preventDefault();
            void submitCurrent();
        } else if (event.key === 'a' && event.altKey) {
            event.preventDefault();
            document.getElementById('accept-btn')?.click();
        }
    });
}

async function start(): Promise<void> {
    while (!annotator) {
        annotator = window.prompt('Annotator id:')?.trim() ?? '';
    }
    localStorage.setItem('annotator', annotator);
    try {
        rules = await api.lexicon();
    } catch (error) {
        console.error('lexicon fetch failed', error);
        rules = [];
    }
    wireShortcuts();
    await refreshProgress();
    await nextTask();
}

void start();
