// Built from the workspace root with: wasm-bindgen --target web --out-dir crates/web/www/pkg target/wasm32-unknown-unknown/release/nls_radial_web.wasm
import init, { ground_state, classify_gaussian, evolve_frames } from "./pkg/nls_radial_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, xs, series, { xmax, ymax } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const x1 = xmax ?? Math.max(...xs);
  const y1 = ymax ?? Math.max(1e-12, ...series.flatMap((s) => s.ys));
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, 5, w - pad - 5, h - pad - 5);
  ctx.fillStyle = "#555";
  ctx.fillText(x1.toPrecision(3), w - 40, h - 10);
  ctx.fillText(y1.toPrecision(3), 2, 14);
  for (const { ys, color } of series) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    xs.forEach((x, i) => {
      const px = pad + (x / x1) * (w - pad - 5);
      const py = h - pad - (ys[i] / y1) * (h - pad - 10);
      i ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
    });
    ctx.stroke();
  }
}

function guarded(out, f) {
  try {
    out.classList.remove("err");
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function showGroundState() {
  guarded($("gs-out"), () => {
    const gs = JSON.parse(ground_state(num("gs-p"), num("gs-rmax"), num("gs-n")));
    plot($("gs-plot"), gs.r, [{ ys: gs.q, color: "#1f5fbf" }], { xmax: Math.min(15, gs.r[gs.r.length - 1]) });
    const { r, q, ...rest } = gs;
    $("gs-out").textContent = JSON.stringify(rest, null, 2);
  });
}

function showClassification() {
  guarded($("g-class"), () => {
    const rep = JSON.parse(classify_gaussian(num("g-p"), num("g-a"), num("g-w")));
    delete rep.norms;
    $("g-class").textContent = JSON.stringify(rep, null, 2);
  });
}

let run = null;

function drawFrame(k) {
  if (!run) return;
  const ymax = Math.max(...run.modulus[0], ...run.modulus[k]);
  plot($("g-plot"), run.r, [
    { ys: run.modulus[0], color: "#bbb" },
    { ys: run.modulus[k], color: "#c0392b" },
  ], { xmax: run.r[run.r.length - 1], ymax });
  $("g-time").textContent = `t = ${run.times[k].toFixed(3)}`;
}

function showEvolution() {
  guarded($("g-out"), () => {
    run = JSON.parse(evolve_frames(num("g-p"), num("g-a"), num("g-w"), num("g-t"), num("g-frames")));
    $("g-slider").max = run.times.length - 1;
    $("g-slider").value = 0;
    drawFrame(0);
    plot($("g-kin"), run.times, [{ ys: run.kinetic, color: "#27ae60" }]);
    $("g-out").textContent = run.blowup_time === null
      ? `reached t = ${run.times[run.times.length - 1]}; green: ||grad u||^2 against t`
      : `gradient grew tenfold by t = ${run.blowup_time}: run halted`;
  });
}

await init();
$("gs-run").onclick = showGroundState;
$("g-classify").onclick = showClassification;
$("g-evolve").onclick = showEvolution;
$("g-slider").oninput = (e) => drawFrame(Number(e.target.value));
showGroundState();
showClassification();
