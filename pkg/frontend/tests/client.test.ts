import { describe, expect, it } from "vitest";

import { LabelingClient } from "../src/client.js";

interface Call {
  url: string;
  init?: RequestInit;
}

/** Scripted fetch stub: answers /api/next, /api/labels and /api/stats. */
function makeServer(opts: { labelStatus?: number; failNetwork?: boolean } = {}) {
  const calls: Call[] = [];
  let served = 0;
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    if (opts.failNetwork && url.includes("/api/labels")) {
      throw new TypeError("network down");
    }
    if (url.includes("/api/next")) {
      served += 1;
      return Response.json({
        image_id: `img_${served}`,
        image_url: `/images/img_${served}`,
        task: "quality",
        progress: { labeled: served - 1, total: 10 },
      });
    }
    if (url.includes("/api/labels")) {
      const status = opts.labelStatus ?? 201;
      return Response.json(status === 201 ? { ok: true } : { error: "bad" }, { status });
    }
    if (url.includes("/api/stats")) {
      return Response.json({
        task: "quality",
        counts: { "1": 0, "2": 0, "3": 1, "4": 0 },
        shares: { "1": 0, "2": 0, "3": 100.0, "4": 0 },
        reference_shares: { "1": 7.8, "2": 31.4, "3": 41.9, "4": 18.8 },
      });
    }
    throw new Error(`unexpected url ${url}`);
  };
  return { calls, fetchFn };
}

function postCalls(calls: Call[]): Call[] {
  return calls.filter((c) => c.url.includes("/api/labels"));
}

describe("LabelingClient", () => {
  it("submits a mapped key and advances to the next item", async () => {
    const server = makeServer();
    const client = new LabelingClient({ raterId: "r", task: "quality", fetchFn: server.fetchFn });
    await client.start();
    expect(client.state.current?.imageId).toBe("img_1");

    await client.handleKey("3");
    expect(client.submissions).toEqual([{ imageId: "img_1", task: "quality", value: 3 }]);
    const posts = postCalls(server.calls);
    expect(posts).toHaveLength(1);
    expect(JSON.parse(String(posts[0].init?.body))).toEqual({
      image_id: "img_1",
      task: "quality",
      value: 3,
      rater_id: "r",
    });
    expect(client.state.current?.imageId).toBe("img_2");
    expect(client.state.pending).toBe(false);
  });

  it("ignores unmapped keys entirely (no request)", async () => {
    const server = makeServer();
    const client = new LabelingClient({ raterId: "r", task: "quality", fetchFn: server.fetchFn });
    await client.start();
    await client.handleKey("5");
    await client.handleKey("x");
    await client.handleKey("Enter");
    expect(postCalls(server.calls)).toHaveLength(0);
    expect(client.state.current?.imageId).toBe("img_1");
  });

  it("never double-submits while a rating is in flight", async () => {
    const server = makeServer();
    let release: (r: Response) => void = () => {};
    const gate = new Promise<Response>((resolve) => (release = resolve));
    const slowFetch = async (url: string, init?: RequestInit): Promise<Response> => {
      if (url.includes("/api/labels")) {
        server.calls.push({ url, init });
        return gate;
      }
      return server.fetchFn(url, init);
    };
    const client = new LabelingClient({ raterId: "r", task: "quality", fetchFn: slowFetch });
    await client.start();

    const first = client.handleKey("2");
    await client.handleKey("4"); // inert: submission pending
    await client.handleKey("1"); // inert
    expect(postCalls(server.calls)).toHaveLength(1);
    release(Response.json({ ok: true }, { status: 201 }));
    await first;
    expect(client.submissions).toEqual([{ imageId: "img_1", task: "quality", value: 2 }]);
  });

  it("keeps state and raises the retry banner on network failure", async () => {
    const server = makeServer({ failNetwork: true });
    const client = new LabelingClient({ raterId: "r", task: "quality", fetchFn: server.fetchFn });
    await client.start();
    await client.handleKey("2");
    expect(client.state.banner?.kind).toBe("retry");
    expect(client.state.current?.imageId).toBe("img_1"); // unchanged
    expect(client.submissions).toHaveLength(0);
    expect(client.state.pending).toBe(false);
  });

  it("raises the schema alert on 422", async () => {
    const server = makeServer({ labelStatus: 422 });
    const client = new LabelingClient({ raterId: "r", task: "quality", fetchFn: server.fetchFn });
    await client.start();
    await client.handleKey("2");
    expect(client.state.banner?.kind).toBe("schema");
    expect(client.submissions).toHaveLength(0);
  });

  it("shows the done banner when the corpus is exhausted", async () => {
    const fetchFn = async (url: string): Promise<Response> => {
      if (url.includes("/api/next")) {
        return Response.json({ error: "corpus_exhausted" }, { status: 404 });
      }
      return Response.json({}, { status: 200 });
    };
    const client = new LabelingClient({ raterId: "r", task: "quality", fetchFn });
    await client.fetchNext();
    expect(client.state.current).toBeNull();
    expect(client.state.banner?.kind).toBe("done");
  });

  it("hides the stats panel on malformed payloads without breaking labeling", async () => {
    const server = makeServer();
    const brokenStats = async (url: string, init?: RequestInit): Promise<Response> => {
      if (url.includes("/api/stats")) return Response.json({ task: "quality", counts: {} });
      return server.fetchFn(url, init);
    };
    const client = new LabelingClient({ raterId: "r", task: "quality", fetchFn: brokenStats });
    await client.start();
    expect(client.state.stats).toBeNull();
    await client.handleKey("1");
    expect(client.submissions).toHaveLength(1);
  });

  it("every submitted value came from a mapped key press", async () => {
    const server = makeServer();
    const client = new LabelingClient({ raterId: "r", task: "continuity", fetchFn: server.fetchFn });
    await client.start();
    for (const key of ["c", "D", "z", "C", "5", "d"]) {
      await client.handleKey(key);
    }
    expect(client.submissions.map((s) => s.value)).toEqual([1, 0, 1, 0]);
    expect(postCalls(server.calls)).toHaveLength(4);
  });
});
