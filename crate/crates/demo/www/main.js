import init, { phi_ray, scalar_convergence, radiation_convergence } from "./pkg/eqrf_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
}

function bounds(values) {
  let lo = Math.min(...values), hi = Math.max(...values);
  if (hi === lo) { lo -= 1; hi += 1; }
  return [lo, hi];
}

// Linear plot of several series sharing one x array.
function linePlot(canvas, xs, series) {
  const ctx = canvas.getContext("2d"), w = canvas.width, h = canvas.height, pad = 30;
  axes(ctx, w, h, pad);
  const [x0, x1] = bounds(xs);
  const [y0, y1] = bounds(series.flatMap((s) => s.ys));
  const X = (x) => pad + (x - x0) / (x1 - x0) * (w - 2 * pad);
  const Y = (y) => h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  ctx.fillText(x1.toPrecision(3), w - pad - 20, h - 10);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    xs.forEach((x, i) => (i ? ctx.lineTo(X(x), Y(s.ys[i])) : ctx.moveTo(X(x), Y(s.ys[i]))));
    ctx.stroke();
  }
}

// Log-log scatter of error against N with a least-squares guide line.
function convergencePlot(canvas, res) {
  const ctx = canvas.getContext("2d"), w = canvas.width, h = canvas.height, pad = 40;
  axes(ctx, w, h, pad);
  const lx = res.N.map(Math.log10), ly = res.error.map(Math.log10);
  const [x0, x1] = bounds(lx);
  let [y0, y1] = bounds(ly);
  y0 = Math.floor(y0); y1 = Math.ceil(y1);
  const X = (x) => pad + (x - x0) / (x1 - x0) * (w - 2 * pad);
  const Y = (y) => h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad);
  ctx.fillStyle = "#444";
  for (let k = y0; k <= y1; k++) ctx.fillText(`1e${k}`, 2, Y(k) + 4);
  res.N.forEach((n, i) => ctx.fillText(String(n), X(lx[i]) - 8, h - pad + 16));
  if (res.order !== null) {
    const mx = lx.reduce((a, b) => a + b) / lx.length, my = ly.reduce((a, b) => a + b) / ly.length;
    ctx.strokeStyle = "#aaa";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(X(x0), Y(my - res.order * (x0 - mx)));
    ctx.lineTo(X(x1), Y(my - res.order * (x1 - mx)));
    ctx.stroke();
    ctx.setLineDash([]);
  }
  ctx.fillStyle = "#1a5fb4";
  lx.forEach((x, i) => { ctx.beginPath(); ctx.arc(X(x), Y(ly[i]), 4, 0, 2 * Math.PI); ctx.fill(); });
}

function report(out, res) {
  const rows = res.N.map((n, i) => `N=${String(n).padStart(5)}  error ${res.error[i].toExponential(4)}`);
  const order = res.order === null ? "n/a" : res.order.toFixed(3);
  out.textContent = (res.method ? `${res.method}\n` : "") + rows.join("\n") + `\nobserved order ${order}`;
}

function guarded(outId, f) {
  const out = $(outId);
  try {
    out.classList.remove("err");
    f(out);
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message || e);
  }
}

function drawPhi() {
  guarded("phi-out", (out) => {
    const res = JSON.parse(phi_ray(num("phi-lambda"), num("phi-arg"), num("phi-max"), 400));
    linePlot($("phi-plot"), res.modulus, [
      { ys: res.re, color: "#1a5fb4" },
      { ys: res.im, color: "#c01c28" },
    ]);
    const k = res.modulus.length - 1;
    out.textContent = `φ(z) at |z| = ${res.modulus[k]}: ${res.re[k].toPrecision(12)} ${res.im[k] < 0 ? "-" : "+"} ${Math.abs(res.im[k]).toPrecision(12)}i`;
  });
}

function runScalar() {
  guarded("sc-out", (out) => {
    const res = JSON.parse(scalar_convergence(num("sc-r"), num("sc-c1")));
    convergencePlot($("sc-plot"), res);
    report(out, res);
  });
}

function runRadiation() {
  guarded("rad-out", (out) => {
    const [nodes, nu] = $("rad-nodes").value.split(":");
    const res = JSON.parse(radiation_convergence(num("rad-r"), nodes, parseInt(nu, 10), parseInt($("rad-modes").value, 10)));
    convergencePlot($("rad-plot"), res);
    report(out, res);
  });
}

await init();
for (const id of ["phi-lambda", "phi-arg", "phi-max"]) $(id).addEventListener("input", drawPhi);
$("sc-run").addEventListener("click", runScalar);
$("rad-run").addEventListener("click", runRadiation);
drawPhi();
runScalar();
runRadiation();
