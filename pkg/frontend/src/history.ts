// Session-local query history with back/forward navigation.

export interface HistoryEntry {
    query: string;
    k: number;
}

export class QueryHistory {
    private entries: HistoryEntry[] = [];
    private cursor = -1;

    /** Record a new search, truncating any forward entries. */
    push(entry: HistoryEntry): void {
        const current = this.current();
        if (current && current.query === entry.query && current.k === entry.k) {
            return; // resubmitting the same search is not a new step
        }
        this.entries = this.entries.slice(0, this.cursor + 1);
        this.entries.push(entry);
        this.cursor = this.entries.length - 1;
    }

    current(): HistoryEntry | null {
        return this.cursor >= 0 ? this.entries[this.cursor] ?? null : null;
    }

    canBack(): boolean {
        return this.cursor > 0;
    }

    canForward(): boolean {
        return this.cursor < this.entries.length - 1;
    }

    back(): HistoryEntry | null {
        if (!this.canBack()) {
            return null;
        }
        this.cursor -= 1;
        return this.current();
    }

    forward(): HistoryEntry | null {
        if (!this.canForward()) {
            return null;
        }
        this.cursor += 1;
        return this.current();
    }
}
