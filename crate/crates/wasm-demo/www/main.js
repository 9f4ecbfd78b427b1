import init, { gini_and_lorenz, target_curve, predict_population, subsample_bias } from "./pkg/popgini_wasm.js";

const $ = (id) => document.getElementById(id);

function show(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.classList.toggle("error", isError);
}

function call(outId, fn) {
  try {
    return JSON.parse(fn());
  } catch (e) {
    show(outId, String(e), true);
    return null;
  }
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
}

function drawLorenz(points) {
  const c = $("lorenz");
  const ctx = c.getContext("2d");
  const pad = 24;
  const size = c.width - 2 * pad;
  const px = (x) => pad + x * size;
  const py = (y) => c.height - pad - y * size;
  axes(ctx, c.width, c.height, pad);
  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(px(0), py(0));
  ctx.lineTo(px(1), py(1));
  ctx.stroke();
  ctx.fillStyle = "rgba(40, 100, 200, 0.15)";
  ctx.strokeStyle = "#2864c8";
  ctx.lineWidth = 2;
  ctx.beginPath();
  points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(px(x), py(y)) : ctx.lineTo(px(x), py(y))));
  ctx.lineTo(px(1), py(1));
  ctx.closePath();
  ctx.fill();
  ctx.stroke();
  ctx.lineWidth = 1;
}

function runGini() {
  const v = call("gini-out", () => gini_and_lorenz($("incomes").value));
  if (!v) return;
  show("gini-out", `n         ${v.n}\nGini      ${v.gini.toFixed(6)}\n(n-1)/n   ${v.max_gini.toFixed(6)}`);
  drawLorenz(v.lorenz);
}

const BAND_COLORS = { "within-5": "#2a9d2a", "within-10": "#e0a000" };

function drawCurve(v, marker) {
  const c = $("curve");
  const ctx = c.getContext("2d");
  const pad = 36;
  const maxLn = Math.log(v.curve[v.curve.length - 1][0]);
  const maxG = 0.7;
  const px = (p) => pad + (Math.log(p) / maxLn) * (c.width - 2 * pad);
  const py = (g) => c.height - pad - (g / maxG) * (c.height - 2 * pad);
  axes(ctx, c.width, c.height, pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px system-ui";
  for (let g = 0; g <= maxG + 1e-9; g += 0.1) ctx.fillText(g.toFixed(1), 4, py(g) + 4);
  for (let e = 0; e <= maxLn / Math.LN10; e += 2) ctx.fillText(`1e${e}`, px(10 ** e) - 8, c.height - pad + 14);

  for (const row of v.countries) {
    ctx.fillStyle = BAND_COLORS[row.band] || "#888";
    ctx.beginPath();
    ctx.arc(px(row.population), py(row.actual_gini), 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.strokeStyle = "#c0392b";
  ctx.lineWidth = 2;
  ctx.beginPath();
  v.curve.forEach(([p, g], i) => (i === 0 ? ctx.moveTo(px(p), py(g)) : ctx.lineTo(px(p), py(g))));
  ctx.stroke();
  ctx.lineWidth = 1;
  if (marker) {
    ctx.strokeStyle = "#000";
    ctx.beginPath();
    ctx.arc(px(marker.population), py(marker.gini), 6, 0, 2 * Math.PI);
    ctx.stroke();
  }
}

function runPredict() {
  const full = $("full").checked;
  const curve = call("predict-out", () => target_curve(full, 200));
  if (!curve) return;
  const p = call("predict-out", () => predict_population(Number($("population").value), full));
  drawCurve(curve, p);
  if (!p) return;
  const notes = [];
  if (p.extrapolated) notes.push("beyond the largest fitted population");
  if (p.out_of_bounds) notes.push("outside [0, (P-1)/P]");
  show(
    "predict-out",
    `target Gini  ${p.gini.toFixed(4)}\n` +
      `beta1 ${p.beta1}, beta2 ${p.beta2}\n` +
      `countries within 5%: ${curve.within_5}, within 10%: ${curve.within_10_cumulative}` +
      (notes.length ? `\nnote: ${notes.join("; ")}` : ""),
  );
}

function runBias() {
  const k = Number($("k").value);
  const trials = Number($("trials").value);
  const seed = Number($("seed").value);
  const v = call("bias-out", () => subsample_bias($("incomes").value, k, trials, seed));
  if (!v) return;
  const defined = v.mean_defined_gini === null ? "n/a" : v.mean_defined_gini.toFixed(6);
  show(
    "bias-out",
    `full-sample Gini        ${v.full_gini.toFixed(6)}\n` +
      `mean subsample Gini     ${v.mean_subsample_gini.toFixed(6)} +/- ${v.stderr_of_mean.toFixed(6)}\n` +
      `all-zero draws          ${v.skipped_zero_draws} of ${v.trials}\n` +
      `mean over nonzero draws ${defined}`,
  );
}

async function main() {
  await init();
  show("status", "");
  $("gini-run").addEventListener("click", runGini);
  $("predict-run").addEventListener("click", runPredict);
  $("full").addEventListener("change", runPredict);
  $("bias-run").addEventListener("click", runBias);
  runGini();
  runPredict();
  runBias();
}

main().catch((e) => show("status", `failed to load: ${e}`, true));
