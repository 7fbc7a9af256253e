"""HTTP handlers."""
import subprocess

from flask import Flask, request

from . import db

app = Flask(__name__)
UPLOAD_ROOT = "/srv/shop/uploads/"


@app.route("/hello")
def hello():
    name = request.args.get("name", "guest")
    return "<h1>Hello " + name + "</h1><p>Welcome to the shop.</p>"


@app.route("/customer/<customer_id>")
def customer(customer_id):
    record = db.get_customer(customer_id)
    if record is None:
        return {"error": "not found"}, 404
    return record


@app.route("/invoice")
def invoice():
    filename = request.args.get("file")
    with open(UPLOAD_ROOT + filename, "rb") as fh:
        data = fh.read()
    return data, 200, {"Content-Type": "application/pdf"}


@app.route("/diagnostics/ping")
def ping():
    host = request.args.get("host", "127.0.0.1")
    proc = subprocess.run(["sh", "-c", "ping -c 1 %s" % host], capture_output=True)
    return {"reachable": proc.returncode == 0}
