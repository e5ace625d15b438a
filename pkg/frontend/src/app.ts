// Single-page search UI: query box, result-count selector, results column.
// One search is in flight at a time; a newer submission aborts the pending
// one. The UI renders server results verbatim, never reordering them.

import { ApiError, FetchLike, SearchResultItem, searchSnippets } from "./api.js";
import { highlightPython } from "./highlight.js";
import { QueryHistory } from "./history.js";

export interface AppOptions {
    apiBase: string;
    fetchFn?: FetchLike;
    /** Injectable for tests; defaults to navigator.clipboard. */
    copyText?: (text: string) => Promise<void>;
}

const K_CHOICES = [3, 10, 25];

export function createApp(root: HTMLElement, options: AppOptions): void {
    const fetchFn = options.fetchFn;
    const history = new QueryHistory();
    let inflight: AbortController | null = null;

    root.innerHTML = "";
    const form = document.createElement("form");
    form.className = "search-form";

    const input = document.createElement("input");
    input.type = "search";
    input.placeholder = "Describe the code you need, e.g. 'plot histogram'";
    input.className = "query-input";

    const kSelect = document.createElement("select");
    kSelect.className = "k-select";
    for (const k of K_CHOICES) {
        const option = document.createElement("option");
        option.value = String(k);
        option.textContent = `top ${k}`;
        if (k === 10) {
            option.selected = true;
        }
        kSelect.append(option);
    }

    const submit = document.createElement("button");
    submit.type = "submit";
    submit.textContent = "Search";
    submit.disabled = true;

    const backButton = document.createElement("button");
    backButton.type = "button";
    backButton.textContent = "←";
    backButton.title = "previous query";
    backButton.className = "nav-back";
    backButton.disabled = true;

    const forwardButton = document.createElement("button");
    forwardButton.type = "button";
    forwardButton.textContent = "→";
    forwardButton.title = "next query";
    forwardButton.className = "nav-forward";
    forwardButton.disabled = true;

    form.append(backButton, forwardButton, input, kSelect, submit);

    const status = document.createElement("div");
    status.className = "status";

    const resultsList = document.createElement("ol");
    resultsList.className = "results";

    root.append(form, status, resultsList);

    input.addEventListener("input", () => {
        submit.disabled = input.value.trim().length === 0;
    });

    form.addEventListener("submit", (event) => {
        event.preventDefault();
        const query = input.value.trim();
        if (!query) {
            return;
        }
        const k = Number(kSelect.value);
        history.push({ query, k });
        void runSearch(query, k);
    });

    backButton.addEventListener("click", () => {
        const entry = history.back();
        if (entry) {
            restore(entry.query, entry.k);
        }
    });

    forwardButton.addEventListener("click", () => {
        const entry = history.forward();
        if (entry) {
            restore(entry.query, entry.k);
        }
    });

    function restore(query: string, k: number): void {
        input.value = query;
        kSelect.value = String(k);
        submit.disabled = false;
        void runSearch(query, k);
    }

    function syncNavButtons(): void {
        backButton.disabled = !history.canBack();
        forwardButton.disabled = !history.canForward();
    }

    function setStatus(node: HTMLElement | null): void {
        status.innerHTML = "";
        if (node) {
            status.append(node);
        }
    }

    function message(cls: string, text: string): HTMLElement {
        const node = document.createElement("p");
        node.className = cls;
        node.textContent = text;
        return node;
    }

    async function runSearch(query: string, k: number): Promise<void> {
        inflight?.abort();
        const controller = new AbortController();
        inflight = controller;
        syncNavButtons();
        setStatus(message("searching", "Searching…"));
        try {
            const response = await searchSnippets(options.apiBase, query, k, controller.signal, fetchFn);
            if (controller.signal.aborted) {
                return; // a newer search already took over
            }
            renderResults(response.results);
        } catch (error) {
            if (controller.signal.aborted) {
                return;
            }
            resultsList.innerHTML = "";
            if (error instanceof ApiError && error.status < 500) {
                setStatus(message("validation-error", `Invalid search: ${error.message}`));
                return;
            }
            const banner = document.createElement("div");
            banner.className = "error-banner";
            banner.append(message("error-text", "Search failed. The server may be unavailable."));
            const retry = document.createElement("button");
            retry.type = "button";
            retry.textContent = "Retry";
            retry.className = "retry";
            retry.addEventListener("click", () => void runSearch(query, k));
            banner.append(retry);
            setStatus(banner);
        }
    }

    function renderResults(results: SearchResultItem[]): void {
        resultsList.innerHTML = "";
        if (results.length === 0) {
            setStatus(message("empty-state", "No matching snippets found."));
            return;
        }
        setStatus(null);
        for (const result of results) {
            resultsList.append(renderResult(result));
        }
    }

    function renderResult(result: SearchResultItem): HTMLLIElement {
        const item = document.createElement("li");
        const card = document.createElement("article");
        card.className = "result";

        const header = document.createElement("header");
        const rank = document.createElement("span");
        rank.className = "rank";
        rank.textContent = String(result.rank);
        const description = document.createElement("span");
        description.className = "description";
        description.textContent = result.description;
        const score = document.createElement("span");
        score.className = "score";
        score.textContent = result.score.toFixed(4);
        header.append(rank, description, score);
        card.append(header);

        const pre = document.createElement("pre");
        const code = document.createElement("code");
        try {
            code.append(highlightPython(result.code));
        } catch {
            code.textContent = result.code; // highlighting is best-effort
        }
        pre.append(code);
        card.append(pre);

        const footer = document.createElement("footer");
        const copyButton = document.createElement("button");
        copyButton.type = "button";
        copyButton.className = "copy";
        copyButton.textContent = "Copy";
        copyButton.addEventListener("click", () => void copySnippet(result.code, copyButton, code));
        footer.append(copyButton);
        if (result.url) {
            const link = document.createElement("a");
            link.href = result.url;
            link.target = "_blank";
            link.rel = "noopener";
            link.className = "source-link";
            link.textContent = "source";
            footer.append(link);
        }
        card.append(footer);
        item.append(card);
        return item;
    }

    async function copySnippet(text: string, button: HTMLButtonElement, codeNode: HTMLElement): Promise<void> {
        const write = options.copyText ?? navigator.clipboard?.writeText.bind(navigator.clipboard);
        try {
            if (!write) {
                throw new Error("clipboard unavailable");
            }
            await write(text);
            button.textContent = "Copied";
            button.classList.add("copied");
            setTimeout(() => {
                button.textContent = "Copy";
                button.classList.remove("copied");
            }, 1500);
        } catch {
            // fallback: select the code so the user can copy manually
            const range = document.createRange();
            range.selectNodeContents(codeNode);
            const selection = window.getSelection();
            selection?.removeAllRanges();
            selection?.addRange(range);
            button.textContent = "Select & copy";
        }
    }
}
