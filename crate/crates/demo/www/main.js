import init, { rotatePotential, solvePhase, gapCurve } from "./pkg/lagrot_demo.js";

const $ = (id) => document.getElementById(id);

function compile(expr) {
  const names = Object.getOwnPropertyNames(Math);
  const f = new Function(...names, "x", `return (${expr});`);
  const args = names.map((n) => Math[n]);
  return (x) => f(...args, x);
}

function sample(f, n) {
  const xs = [], ys = [];
  for (let i = 0; i < n; i++) {
    const x = -1 + (2 * i) / (n - 1);
    xs.push(x);
    ys.push(f(x));
  }
  return { xs, ys };
}

// Each series is { xs, ys, color }; non-finite points break the line.
function plot(canvas, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  let x0 = Infinity, x1 = -Infinity, y0 = Infinity, y1 = -Infinity;
  for (const s of series) {
    s.xs.forEach((x, i) => {
      const y = s.ys[i];
      if (!Number.isFinite(y)) return;
      x0 = Math.min(x0, x); x1 = Math.max(x1, x);
      y0 = Math.min(y0, y); y1 = Math.max(y1, y);
    });
  }
  if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
  if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
  const pad = 28;
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#bbb";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px monospace";
  ctx.fillText(y1.toPrecision(3), 2, pad - 4);
  ctx.fillText(y0.toPrecision(3), 2, h - 8);
  ctx.fillText(x0.toPrecision(3), pad, h - 8);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - 8);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    let pen = false;
    s.xs.forEach((x, i) => {
      const y = s.ys[i];
      if (!Number.isFinite(y)) { pen = false; return; }
      pen ? ctx.lineTo(px(x), py(y)) : ctx.moveTo(px(x), py(y));
      pen = true;
    });
    ctx.stroke();
  }
}

function guarded(errId, run) {
  return () => {
    $(errId).textContent = "";
    try {
      run();
    } catch (e) {
      $(errId).textContent = String(e);
    }
  };
}

const runRotate = guarded("rot-err", () => {
  const n = Number($("rot-n").value);
  const u = sample(compile($("rot-expr").value), n);
  const r = JSON.parse(rotatePotential(-1, 1, Float64Array.from(u.ys), Number($("rot-alpha").value)));
  plot($("rot-u"), [
    { ...u, color: "#1f77b4" },
    { xs: r.x_bar, ys: r.u_bar, color: "#d62728" },
  ]);
  plot($("rot-l"), [
    { xs: r.x_bar, ys: r.lambda_bar, color: "#2ca02c" },
    { xs: [r.x_bar[0], r.x_bar[r.x_bar.length - 1]], ys: [1, 1], color: "#ccc" },
    { xs: [r.x_bar[0], r.x_bar[r.x_bar.length - 1]], ys: [-1, -1], color: "#ccc" },
  ]);
});

const runSolve = guarded("sol-err", () => {
  const n = Number($("sol-n").value);
  const psi = sample(compile($("sol-expr").value), n);
  const s = JSON.parse(
    solvePhase(-1, 1, Float64Array.from(psi.ys), Number($("sol-left").value), Number($("sol-right").value)),
  );
  plot($("sol-u"), [{ xs: s.x, ys: s.u, color: "#1f77b4" }]);
  plot($("sol-r"), [
    { xs: s.residuals.map((_, i) => i), ys: s.residuals.map((r) => Math.log10(Math.max(r, 1e-17))), color: "#9467bd" },
  ]);
});

function drawGap() {
  const g = JSON.parse(gapCurve(201));
  plot($("gap-c"), [
    { xs: g.t, ys: g.b_bar, color: "#ff7f0e" },
    { xs: g.t, ys: g.gap, color: "#17becf" },
  ]);
}

await init();
$("rot-go").addEventListener("click", runRotate);
$("sol-go").addEventListener("click", runSolve);
runRotate();
runSolve();
drawGap();
