/** DOM wiring: renders the labeling client state and forwards key presses. */

import { LabelingClient, type UiState } from "./client.js";
import { buttonsFor, TASKS, type Task } from "./keymap.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

function askRaterId(): string {
  const stored = localStorage.getItem("rater_id");
  if (stored) return stored;
  const entered = (prompt("Rater id (shown once, kept in this browser):") || "anonymous").trim();
  const raterId = entered || "anonymous";
  localStorage.setItem("rater_id", raterId);
  return raterId;
}

function render(state: UiState): void {
  const image = $<HTMLImageElement>("image");
  const placeholder = $("placeholder");
  if (state.current) {
    image.src = state.current.imageUrl;
    image.hidden = false;
    placeholder.hidden = true;
    $("progress").textContent =
      `${state.current.labeled} / ${state.current.total} images labeled (${state.task})`;
  } else {
    image.hidden = true;
    placeholder.hidden = false;
    $("progress").textContent = "";
  }

  const banner = $("banner");
  const warning = state.current?.warning;
  if (state.banner) {
    banner.textContent = state.banner.message;
    banner.className = `banner ${state.banner.kind}`;
    banner.hidden = false;
  } else if (warning) {
    banner.textContent = warning;
    banner.className = "banner retry";
    banner.hidden = false;
  } else {
    banner.hidden = true;
  }

  $("submit-state").textContent = state.pending ? "submitting..." : "";

  const stats = $("stats");
  if (state.stats) {
    stats.hidden = false;
    $("stats-total").textContent = `${state.stats.total} resolved labels`;
    const rows = state.stats.bars
      .map(
        (bar) => `
      <div class="stat-row">
        <span class="stat-cls">${bar.cls}</span>
        <span class="stat-count">${bar.count}</span>
        <div class="bar-pair">
          <div class="bar live" style="width:${bar.livePct.toFixed(1)}%"></div>
          <div class="bar ref" style="width:${bar.refPct.toFixed(1)}%"></div>
        </div>
        <span class="stat-pct">${bar.livePct.toFixed(1)}% / ${bar.refPct.toFixed(1)}%</span>
      </div>`
      )
      .join("");
    $("stats-bars").innerHTML = rows;
  } else {
    stats.hidden = true;
  }
}

function renderButtons(client: LabelingClient, task: Task): void {
  const holder = $("buttons");
  holder.innerHTML = "";
  for (const spec of buttonsFor(task)) {
    const btn = document.createElement("button");
    btn.textContent = `${spec.label} (${spec.key})`;
    btn.addEventListener("click", () => void client.submit(spec.value));
    holder.appendChild(btn);
  }
}

function main(): void {
  const raterId = askRaterId();
  const taskSelect = $<HTMLSelectElement>("task");
  for (const task of TASKS) {
    const opt = document.createElement("option");
    opt.value = task;
    opt.textContent = task;
    taskSelect.appendChild(opt);
  }
  taskSelect.value = "quality";

  const strategySelect = $<HTMLSelectElement>("strategy");
  const client = new LabelingClient({
    raterId,
    task: taskSelect.value as Task,
    strategy: strategySelect.value as "sequential" | "uncertain",
    onChange: render,
  });
  renderButtons(client, taskSelect.value as Task);

  taskSelect.addEventListener("change", () => {
    renderButtons(client, taskSelect.value as Task);
    void client.switchTask(taskSelect.value as Task);
  });
  strategySelect.addEventListener("change", () => {
    client.state.strategy = strategySelect.value as "sequential" | "uncertain";
    void client.fetchNext();
  });

  document.addEventListener("keydown", (ev) => {
    if (ev.target instanceof HTMLInputElement || ev.target instanceof HTMLSelectElement) return;
    void client.handleKey(ev.key);
  });

  $("rater").textContent = raterId;
  void client.start();
}

main();
