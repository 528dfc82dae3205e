"""Run script for the Flask application (run service and `flask --app run` CLI)."""
from app import create_app

app = create_app()

if __name__ == "__main__":
    # Development server. For production use a WSGI server (gunicorn / waitress)
    app.run(host="127.0.0.1", port=5000, debug=False)
