import init, { lorenz_curve, gini, fit_shares, sample_preset } from "./pkg/lorenzfit_wasm.js";

const $ = (id) => document.getElementById(id);
const nums = (s) => s.split(/[\s,;]+/).filter(Boolean).map(Number);
const fmt = (x) => (Math.abs(x) >= 1e4 || (x !== 0 && Math.abs(x) < 1e-3) ? x.toExponential(4) : x.toFixed(4));

function show(el, text, isError) {
  el.textContent = text;
  el.className = isError ? "out err" : "out";
}

function lorenzAxes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.beginPath();
  ctx.moveTo(pad, h - pad);
  ctx.lineTo(w - pad, pad);
  ctx.stroke();
}

// ys sampled at equally spaced u in [0, 1]
function polyline(ctx, ys, w, h, pad, color) {
  const n = ys.length - 1;
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ys.forEach((y, i) => {
    const px = pad + (i / n) * (w - 2 * pad);
    const py = h - pad - y * (h - 2 * pad);
    i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
  });
  ctx.stroke();
  ctx.lineWidth = 1;
}

function drawCurve() {
  const c = $("c-canvas"), ctx = c.getContext("2d");
  try {
    const fam = $("c-family").value, p = new Float64Array(nums($("c-params").value));
    const ys = lorenz_curve(fam, p, 201);
    lorenzAxes(ctx, c.width, c.height, 20);
    polyline(ctx, ys, c.width, c.height, 20, "#1565c0");
    show($("c-out"), `Gini ${fmt(gini(fam, p))}`);
  } catch (e) {
    show($("c-out"), String(e.message ?? e), true);
  }
}

function runFit() {
  const c = $("f-canvas"), ctx = c.getContext("2d");
  try {
    const shares = nums($("f-shares").value);
    const meanText = $("f-mean").value.trim();
    const mean = meanText === "" ? NaN : Number(meanText);
    const r = fit_shares(new Float64Array(shares), mean, $("f-family").value, $("f-gmm").checked);
    lorenzAxes(ctx, c.width, c.height, 20);
    polyline(ctx, r.curve, c.width, c.height, 20, "#2e7d32");
    // observed cumulative shares
    const total = shares.reduce((a, b) => a + b, 0);
    let cum = 0;
    ctx.fillStyle = "#c62828";
    shares.forEach((s, i) => {
      cum += s / total;
      const u = (i + 1) / shares.length;
      ctx.beginPath();
      ctx.arc(20 + u * (c.width - 40), c.height - 20 - cum * (c.height - 40), 3, 0, 2 * Math.PI);
      ctx.fill();
    });
    const lines = [
      `family       ${r.family}`,
      `parameters   ${Array.from(r.params, fmt).join(", ")}`,
      `Gini         ${fmt(r.gini)}`,
      `lower bound  ${fmt(r.lower_bound)}`,
      `objective    ${fmt(r.objective)}`,
    ];
    if (Number.isNaN(mean)) lines.push("scale not identified without a mean");
    show($("f-out"), lines.join("\n"));
  } catch (e) {
    show($("f-out"), String(e.message ?? e), true);
  }
}

let lastShares = null;

function runSample() {
  const c = $("s-canvas"), ctx = c.getContext("2d");
  try {
    const s = sample_preset(Number($("s-preset").value), Number($("s-n").value), BigInt($("s-seed").value), 60, 10);
    const counts = s.counts, edges = s.edges;
    const max = Math.max(...counts);
    const pad = 24, w = c.width, h = c.height, bw = (w - 2 * pad) / counts.length;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#6a1b9a";
    counts.forEach((k, i) => {
      const bh = (k / max) * (h - 2 * pad);
      ctx.fillRect(pad + i * bw, h - pad - bh, Math.max(bw - 1, 1), bh);
    });
    ctx.fillStyle = "#333";
    ctx.fillText("0", pad, h - 8);
    ctx.fillText(fmt(edges[edges.length - 1]), w - pad - 40, h - 8);
    lastShares = Array.from(s.shares);
    show($("s-out"), `sample Gini  ${fmt(s.gini)}\ndecile shares ${lastShares.map((x) => (100 * x).toFixed(1)).join(", ")}`);
  } catch (e) {
    show($("s-out"), String(e.message ?? e), true);
  }
}

await init();
$("c-draw").onclick = drawCurve;
$("f-run").onclick = runFit;
$("s-run").onclick = runSample;
$("s-send").onclick = () => {
  if (!lastShares) runSample();
  if (!lastShares) return;
  $("f-shares").value = lastShares.map((x) => (100 * x).toFixed(3)).join(", ");
  runFit();
};
drawCurve();
