import init, { density_curve, sample_path, cosine_decay } from "./pkg/stablemix_wasm.js";

const $ = (id) => document.getElementById(id);

function frame(canvas, xs, ys) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 36;
  const xmin = Math.min(...xs), xmax = Math.max(...xs);
  let ymin = Math.min(...ys), ymax = Math.max(...ys);
  if (ymax === ymin) { ymax += 1; ymin -= 1; }
  const sx = (x) => pad + (x - xmin) / (xmax - xmin) * (w - 2 * pad);
  const sy = (y) => h - pad - (y - ymin) / (ymax - ymin) * (h - 2 * pad);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(ymax.toPrecision(3), 2, pad + 4);
  ctx.fillText(ymin.toPrecision(3), 2, h - pad);
  ctx.fillText(xmin.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(xmax.toPrecision(3), w - pad - 24, h - pad + 14);
  return { ctx, sx, sy };
}

function line(f, xs, ys, color) {
  f.ctx.strokeStyle = color;
  f.ctx.beginPath();
  xs.forEach((x, i) => (i ? f.ctx.lineTo(f.sx(x), f.sy(ys[i])) : f.ctx.moveTo(f.sx(x), f.sy(ys[i]))));
  f.ctx.stroke();
}

function drawDensity() {
  const alpha = parseFloat($("d-alpha").value);
  $("d-alpha-val").textContent = alpha.toFixed(2);
  const n = 401, xmax = 6;
  const xs = Array.from({ length: n }, (_, i) => -xmax + 2 * xmax * i / (n - 1));
  const ys = Array.from(density_curve(alpha, xmax, n));
  const gauss = xs.map((x) => Math.exp(-x * x / 4) / Math.sqrt(4 * Math.PI));
  const f = frame($("density"), xs, ys.concat(gauss));
  line(f, xs, gauss, "#c33");
  line(f, xs, ys, "#36c");
}

function drawPath() {
  const alpha = parseFloat($("p-alpha").value), gamma = parseFloat($("p-gamma").value);
  const c = parseFloat($("p-c").value), seed = BigInt($("p-seed").value);
  const h = 0.01, tEnd = 20;
  const ys = Array.from(sample_path(alpha, gamma, 1.0, c, 0.0, tEnd, h, seed));
  const xs = ys.map((_, i) => i * h);
  line(frame($("path"), xs, ys), xs, ys, "#36c");
}

function drawDecay() {
  const alpha = parseFloat($("c-alpha").value), paths = parseInt($("c-paths").value, 10);
  const rows = cosine_decay(alpha, 1.0, 1.0, 2.0, 4.0, 21, paths, 7n);
  const t = [], est = [], se = [], exact = [];
  for (let i = 0; i < rows.length; i += 4) {
    t.push(rows[i]); est.push(rows[i + 1]); se.push(rows[i + 2]); exact.push(rows[i + 3]);
  }
  const lo = est.map((v, i) => v - 3 * se[i]), hi = est.map((v, i) => v + 3 * se[i]);
  const f = frame($("decay"), t, lo.concat(hi, exact));
  line(f, t, exact, "#36c");
  f.ctx.strokeStyle = "#c33";
  t.forEach((x, i) => {
    f.ctx.beginPath();
    f.ctx.moveTo(f.sx(x), f.sy(lo[i]));
    f.ctx.lineTo(f.sx(x), f.sy(hi[i]));
    f.ctx.stroke();
    f.ctx.fillStyle = "#c33";
    f.ctx.fillRect(f.sx(x) - 2, f.sy(est[i]) - 2, 4, 4);
  });
}

function guarded(fn) {
  return () => {
    try {
      fn();
      $("status").textContent = "";
    } catch (e) {
      $("status").textContent = String(e);
    }
  };
}

await init();
$("d-alpha").addEventListener("input", guarded(drawDensity));
$("p-run").addEventListener("click", guarded(drawPath));
$("c-run").addEventListener("click", guarded(drawDecay));
guarded(drawDensity)();
guarded(drawPath)();
guarded(drawDecay)();
