import init, { levelCurve, sandwich, spectrum } from "./pkg/conecap_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function show(el, text, error) {
  el.textContent = text;
  el.className = error ? "err" : "";
}

// Maps data coordinates onto a canvas with equal scales on both axes
// unless `free` is set.
function frame(canvas, xs, ys, free) {
  const pad = 24;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  let sx = (canvas.width - 2 * pad) / (x1 - x0 || 1);
  let sy = (canvas.height - 2 * pad) / (y1 - y0 || 1);
  if (!free) sx = sy = Math.min(sx, sy);
  const cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  return ([x, y]) => [canvas.width / 2 + (x - cx) * sx, canvas.height / 2 - (y - cy) * sy];
}

function polyline(ctx, to, pts, color, width) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [u, v] = to(p);
    if (i === 0) ctx.moveTo(u, v); else ctx.lineTo(u, v);
  });
  ctx.stroke();
}

function drawLevel() {
  const e = num("lv-e");
  $("lv-e-val").textContent = e.toFixed(2);
  const canvas = $("lv-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  try {
    const r = JSON.parse(levelCurve(num("lv-a"), num("lv-b"), num("lv-c"), num("lv-eps"), e, $("lv-lower").checked));
    const all = r.samples.concat(...r.homoclinic);
    const to = frame(canvas, all.map((p) => p[0]), all.map((p) => p[1]));
    r.homoclinic.forEach((loop) => polyline(ctx, to, loop, "#aaa", 1));
    polyline(ctx, to, r.samples, "#1f5fbf", 2);
    ctx.fillStyle = "#c33";
    r.critical_points.forEach((p) => {
      const [u, v] = to(p);
      ctx.fillRect(u - 2, v - 2, 4, 4);
    });
    show($("lv-out"),
      `action ∮x dy = ${r.action.toFixed(9)}\nperiod = ${r.period.toFixed(6)}\n` +
      `closed = ${r.closed}\nmin H_C = ${r.min_energy.toFixed(6)}\nhomoclinic loop area = ${r.homoclinic_area.toFixed(9)}`);
  } catch (err) {
    show($("lv-out"), String(err.message || err), true);
  }
}

function runSandwich() {
  try {
    const r = JSON.parse(sandwich($("sw-expr").value, num("sw-max"), num("sw-rho1"), num("sw-rho0"), num("sw-m"),
      Math.round(num("sw-n")), 0));
    const f = (x) => x.toPrecision(6);
    show($("sw-out"),
      `V^{a,b}   a = ${f(r.inner.a)}, b = ${f(r.inner.b)}\n` +
      `V^{a',b'} a' = ${f(r.outer.a)}, b' = ${f(r.outer.b)}\n` +
      `margins ${r.margins.map(f).join(", ")}\n` +
      `capacity in [${f(r.capacity.lo)}, ${f(r.capacity.hi)}]\n` +
      `audit: ${r.audit.samples} samples, ${r.audit.inner_tested} in V^{a,b}, ${r.audit.star_tested} in V(H), ` +
      `violations ${r.audit.violations}`);
  } catch (err) {
    show($("sw-out"), String(err.message || err), true);
  }
}

function runSpectrum() {
  const canvas = $("sp-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  try {
    const r = JSON.parse(spectrum(num("sp-a"), num("sp-b"), num("sp-c"), 0.01, num("sp-top"), Math.round(num("sp-labels"))));
    const xs = r.entries.map((p) => p[0]);
    const ys = r.entries.map((p) => p[1]).concat([0, r.bound]);
    const to = frame(canvas, xs, ys, true);
    const [lo, hi] = [Math.min(...xs), Math.max(...xs)];
    polyline(ctx, to, [[lo, r.bound], [hi, r.bound]], "#c33", 1);
    ctx.fillStyle = "#1f5fbf";
    r.entries.forEach((p) => {
      const [u, v] = to(p);
      ctx.fillRect(u - 1, v - 1, 2, 2);
    });
    show($("sp-out"),
      `group (i): ${r.group_i.map((x) => x.toFixed(9)).join(", ") || "none in window"}\n` +
      `group (ii): bound C²B = ${r.bound.toFixed(6)} (red), min scanned action ${r.min_action.toFixed(6)}, ` +
      `violations ${r.violations}\n(points: planar energy of the label vs action)`);
  } catch (err) {
    show($("sp-out"), String(err.message || err), true);
  }
}

await init();
["lv-a", "lv-b", "lv-c", "lv-eps", "lv-e", "lv-lower"].forEach((id) => $(id).addEventListener("input", drawLevel));
$("sw-run").addEventListener("click", runSandwich);
$("sp-run").addEventListener("click", runSpectrum);
drawLevel();
runSandwich();
runSpectrum();
