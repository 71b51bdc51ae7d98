import init, { tiv, tradeoff, qsort } from "./pkg/sbr_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const pct = (x) => (x == null ? "n/a" : (100 * x).toFixed(1) + "%");

function parseWindow(text) {
  return text.split("\n").map((l) => l.trim()).filter((l) => l).map((line, i) => {
    const [alloc, latency, pred] = line.split(/\s+/);
    if (isNaN(+alloc) || isNaN(+latency)) throw new Error(`line ${i + 1}: expected "alloc latency"`);
    return { alloc: +alloc, latency: +latency, fetch_pred: pred === "T" };
  });
}

function renderTiv() {
  const out = $("tivOut");
  let branches;
  try {
    branches = parseWindow($("win").value);
  } catch (e) {
    out.innerHTML = `<p class="err">${e.message}</p>`;
    return;
  }
  const req = {
    branches,
    subject: num("subj") - 1,
    rob_size: num("rob"),
    tiv: {
      n_tiv: num("ntiv"), repredict_cycle: num("rc"), co_threshold: num("co"),
      y_threshold: num("yt"), include_ytiv: $("ytiv").checked,
    },
  };
  const r = JSON.parse(tiv(JSON.stringify(req)));
  if (r.error) {
    out.innerHTML = `<p class="err">${r.error}</p>`;
    return;
  }
  const bits = [...r.bits].map((b) => `<span class="${b}">${b}</span>`).join("");
  const rows = r.states.map((s, i) => `<tr><td>${i + 1}</td><td>${branches[i].alloc}</td><td>${branches[i].latency}</td><td>${s}</td></tr>`).join("");
  out.innerHTML = `
    <p>Re-predicted at cycle ${r.now}. Vector (oldest first, fetch bit last): <span class="bits">${bits}</span> = <code>${r.hex}</code></p>
    <p>${r.commit} retired, ${r.older} older, ${r.younger} younger, ${r.padded} padding bits.</p>
    <table><tr><th>line</th><th>alloc</th><th>latency</th><th>state at re-predict</th></tr>${rows}</table>`;
}

function renderTradeoff() {
  const [benefit, penalty] = tradeoff(num("frac"), num("acc"));
  $("tradeOut").textContent =
    `Correctable by overriding: ${pct(benefit)} of instructions; put at risk by blind overriding: ${pct(penalty)}.`;
}

function runQsort() {
  const out = $("qOut");
  out.textContent = "Running...";
  // let the message paint before the synchronous run
  setTimeout(() => {
    const req = {
      table_size: num("qsize"), miss_prob: num("qmiss"), repredict_cycle: num("qrc"),
      co_threshold: num("qco"), conf_fetch_max: num("qconf"), seed: 1,
    };
    const t0 = performance.now();
    const r = JSON.parse(qsort(JSON.stringify(req)));
    if (r.error) {
      out.innerHTML = `<p class="err">${r.error}</p>`;
      return;
    }
    const cats = r.categories.filter(([, n]) => n > 0).map(([c, n]) => `<tr><td style="text-align:left">${c}</td><td>${n}</td></tr>`).join("");
    out.innerHTML = `
      <p>${r.records} records in ${((performance.now() - t0) / 1000).toFixed(1)} s.
      Fetch accuracy on branch A: ${pct(r.fetch_accuracy_fast)} when resolved within 8 cycles,
      ${pct(r.fetch_accuracy_slow)} when it takes 14 or more.</p>
      <p>Branch A: ${r.instances} instances, ${r.fetch_mispredicts} fetch mispredictions,
      reduction <b>${pct(r.reduction)}</b>, ${r.cycles_saved} cycles saved, ${r.cycles_lost} lost.</p>
      <table><tr><th>category</th><th>count</th></tr>${cats}</table>`;
  }, 20);
}

await init();
for (const id of ["win", "subj", "ntiv", "rc", "co", "yt", "ytiv", "rob"]) $(id).addEventListener("input", renderTiv);
for (const id of ["frac", "acc"]) $(id).addEventListener("input", renderTradeoff);
$("qrun").addEventListener("click", runQsort);
renderTiv();
renderTradeoff();
