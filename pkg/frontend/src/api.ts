// Typed client for the read-only search API (GET only).

export interface SearchResultItem {
    rank: number;
    id: string;
    description: string;
    code: string;
    url: string | null;
    score: number;
}

export interface SearchResponse {
    query: string;
    results: SearchResultItem[];
    empty_encoding?: boolean;
}

export class ApiError extends Error {
    constructor(public readonly status: number, message: string) {
        super(message);
        this.name = "ApiError";
    }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export async function searchSnippets(
    baseUrl: string,
    query: string,
    k: number,
    signal: AbortSignal,
    fetchFn: FetchLike = (input, init) => fetch(input, init),
): Promise<SearchResponse> {
    const params = new URLSearchParams({ q: query, k: String(k) });
    const response = await fetchFn(`${baseUrl}/api/search?${params}`, { signal });
    if (!response.ok) {
        let detail = `request failed with status ${response.status}`;
        try {
            const body = (await response.json()) as { error?: string };
            if (body && typeof body.error === "string") {
                detail = body.error;
            }
        } catch {
            // non-JSON error body; keep the generic message
        }
        throw new ApiError(response.status, detail);
    }
    return (await response.json()) as SearchResponse;
}
